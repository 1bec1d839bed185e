//! Innovative encoding vectors: per-user coding state, the innovativeness
//! test, sequential assignment, the hitting-set based generators (OH, GH),
//! the binary equation-set relaxation (SBES), brute-force oracles and
//! constructions of hard instances.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gfield::{Elem, Field};
use crate::gfmatrix::{self, field_from_tokens, parse_row, LinalgError, Matrix, NullTracker};
use crate::hitting::{self, HittingError, HittingInstance};
use crate::ops;

/// Enumeration limit for the brute-force oracles.
pub const BRUTE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InnovateError {
    #[error("{k} forms need a field of order at least {k}, got {q}")]
    TooManyForms { k: usize, q: u32 },
    #[error("form {0} has no nonzero coefficient")]
    ZeroForm(usize),
    #[error("support set is empty")]
    EmptySupport,
    #[error("scenario has no unfinished users")]
    NoUsers,
    #[error("rows of user {0} are linearly dependent")]
    DependentRows(usize),
    #[error("search space of {0} vectors exceeds the enumeration limit")]
    TooLarge(u64),
    #[error("no innovative vector exists")]
    Empty,
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Hitting(#[from] HittingError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Coding state of one receiver: received rows `C`, a null-space basis `B`
/// and the support mask of `B`'s columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserState {
    id: usize,
    c_rows: Matrix,
    b_basis: Matrix,
    btilde: Vec<bool>,
    tracker: Option<NullTracker>,
}

impl UserState {
    /// A user that has received nothing, backed by an incremental tracker.
    pub fn new(id: usize, n: usize, field: &Field) -> Self {
        let tracker = NullTracker::new(n, field);
        let mut u = UserState {
            id,
            c_rows: Matrix::zeros(field, 0, n),
            b_basis: Matrix::zeros(field, 0, n),
            btilde: Vec::new(),
            tracker: Some(tracker),
        };
        u.refresh_from_tracker();
        u
    }

    /// A tracked user holding the rows of `c`, which must be independent.
    pub fn from_rows(id: usize, c: &Matrix) -> Result<Self, InnovateError> {
        let mut u = UserState::new(id, c.cols(), c.field());
        for row in c.row_iter() {
            if !u.receive(row)? {
                return Err(InnovateError::DependentRows(id));
            }
        }
        Ok(u)
    }

    /// A user described by its null-space basis, kept row for row. Rows that
    /// do not raise the rank are dropped. The user is not tracked, so
    /// [`UserState::receive`] recomputes the basis from scratch.
    pub fn from_null_basis(id: usize, b: &Matrix) -> Self {
        let field = b.field().clone();
        let mut kept = Matrix::zeros(&field, 0, b.cols());
        for row in b.row_iter() {
            let mut trial = kept.clone();
            trial.push_row(row).expect("same width");
            if trial.rank() > kept.rows() {
                kept = trial;
            }
        }
        let c_rows = gfmatrix::null_space_basis(&kept);
        let btilde = support_mask(&kept);
        let u = UserState {
            id,
            c_rows,
            b_basis: kept,
            btilde,
            tracker: None,
        };
        u.debug_validate();
        u
    }

    fn refresh_from_tracker(&mut self) {
        let t = self.tracker.as_ref().expect("tracked user");
        self.c_rows = t.received();
        self.b_basis = t.null_basis();
        self.btilde = support_mask(&self.b_basis);
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn n(&self) -> usize {
        self.c_rows.cols()
    }

    pub fn field(&self) -> &Field {
        self.c_rows.field()
    }

    pub fn rank(&self) -> usize {
        self.c_rows.rows()
    }

    pub fn is_finished(&self) -> bool {
        self.rank() == self.n()
    }

    pub fn c_rows(&self) -> &Matrix {
        &self.c_rows
    }

    pub fn b_basis(&self) -> &Matrix {
        &self.b_basis
    }

    pub fn btilde(&self) -> &[bool] {
        &self.btilde
    }

    pub fn tracker(&self) -> Option<&NullTracker> {
        self.tracker.as_ref()
    }

    /// `B x != 0`, i.e. `x` lies outside the span of the received rows.
    pub fn is_innovative(&self, x: &[Elem]) -> Result<bool, InnovateError> {
        if let Some(t) = &self.tracker {
            return Ok(t.is_innovative(x)?);
        }
        check_len(x, self.n())?;
        let f = self.field();
        Ok(self.b_basis.row_iter().any(|b| f.dot(b, x) != 0))
    }

    /// Absorbs `x` if it is innovative; returns whether it was.
    pub fn receive(&mut self, x: &[Elem]) -> Result<bool, InnovateError> {
        if !self.is_innovative(x)? {
            return Ok(false);
        }
        match &mut self.tracker {
            Some(t) => {
                t.update(x)?;
                self.refresh_from_tracker();
            }
            None => {
                self.c_rows.push_row(x)?;
                self.b_basis = gfmatrix::null_space_basis(&self.c_rows);
                self.btilde = support_mask(&self.b_basis);
            }
        }
        self.debug_validate();
        Ok(true)
    }

    /// Checks rank, orthogonality and mask consistency.
    pub fn validate(&self) -> bool {
        ops::uncounted(|| {
            let n = self.n();
            let r = self.rank();
            if self.c_rows.rank() != r || self.b_basis.rows() != n - r || self.b_basis.rank() != n - r {
                return false;
            }
            let orth = self
                .c_rows
                .mul(&self.b_basis.transpose())
                .map(|p| p.is_zero())
                .unwrap_or(false);
            orth && self.btilde == support_mask(&self.b_basis)
        })
    }

    fn debug_validate(&self) {
        #[cfg(any(test, feature = "paranoid"))]
        assert!(self.validate(), "user {} state invariants violated", self.id);
    }
}

/// Column-wise OR of the nonzero pattern of `b`.
fn support_mask(b: &Matrix) -> Vec<bool> {
    let mut mask = vec![false; b.cols()];
    for row in b.row_iter() {
        for (m, &v) in mask.iter_mut().zip(row) {
            *m |= v != 0;
        }
    }
    mask
}

fn check_len(x: &[Elem], n: usize) -> Result<(), InnovateError> {
    if x.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: x.len(),
        }
        .into());
    }
    Ok(())
}

/// A broadcast state: the unfinished users over a common field and `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    field: Field,
    n: usize,
    users: Vec<UserState>,
}

impl Scenario {
    /// Finished users are dropped. Fails if a user disagrees on `n` or field.
    pub fn new(field: Field, n: usize, users: Vec<UserState>) -> Result<Self, InnovateError> {
        for u in &users {
            if u.n() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: u.n(),
                }
                .into());
            }
            if u.field() != &field {
                return Err(InnovateError::Parse(format!("user {} uses {:?}, expected {:?}", u.id, u.field(), field)));
            }
        }
        let users = users.into_iter().filter(|u| !u.is_finished()).collect();
        Ok(Scenario { field, n, users })
    }

    /// Builds tracked users from their received matrices.
    pub fn from_c_matrices(field: &Field, n: usize, cs: &[Matrix]) -> Result<Self, InnovateError> {
        let users = cs
            .iter()
            .enumerate()
            .map(|(i, c)| UserState::from_rows(i, c))
            .collect::<Result<Vec<_>, _>>()?;
        Scenario::new(field.clone(), n, users)
    }

    /// Builds users directly from null-space bases.
    pub fn from_b_matrices(field: &Field, n: usize, bs: &[Matrix]) -> Result<Self, InnovateError> {
        let users = bs.iter().enumerate().map(|(i, b)| UserState::from_null_basis(i, b)).collect();
        Scenario::new(field.clone(), n, users)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn users(&self) -> &[UserState] {
        &self.users
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    fn refs(&self) -> Vec<&UserState> {
        self.users.iter().collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.field.q(), self.n, self.users.len())?;
        let field_text = self.field.to_string();
        if let Some((_, poly)) = field_text.split_once(',') {
            write!(f, " {poly}")?;
        }
        writeln!(f)?;
        for u in &self.users {
            writeln!(f, "{}", u.rank())?;
            for row in u.c_rows.row_iter() {
                writeln!(f, "{}", gfmatrix::join_elems(row))?;
            }
        }
        Ok(())
    }
}

impl FromStr for Scenario {
    type Err = InnovateError;

    /// Line 1 `q N K [poly=<hex>]`; per user a line `r_k` then `r_k` rows.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| InnovateError::Parse(m);
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() < 3 || toks.len() > 4 {
            return Err(bad(format!("bad header {header:?}")));
        }
        let field = field_from_tokens(toks[0], toks.get(3).copied())?;
        let count = |t: &str| t.parse::<usize>().map_err(|_| bad(format!("bad count {t:?}")));
        let n = count(toks[1])?;
        let k = count(toks[2])?;
        if n == 0 {
            return Err(bad("N must be positive".into()));
        }
        let mut cs = Vec::with_capacity(k);
        for _ in 0..k {
            let r = count(lines.next().ok_or_else(|| bad("missing user block".into()))?)?;
            if r > n {
                return Err(bad(format!("user has {r} rows but N = {n}")));
            }
            let mut c = Matrix::zeros(&field, 0, n);
            for _ in 0..r {
                let line = lines.next().ok_or_else(|| bad("missing matrix row".into()))?;
                c.push_row(&parse_row(line, n)?)?;
            }
            cs.push(c);
        }
        if lines.next().is_some() {
            return Err(bad("trailing lines after the last user".into()));
        }
        Scenario::from_c_matrices(&field, n, &cs)
    }
}

/// Per-user innovativeness flags.
pub fn is_innovative(x: &[Elem], s: &Scenario) -> Result<Vec<bool>, InnovateError> {
    s.users.iter().map(|u| u.is_innovative(x)).collect()
}

pub fn innovative_count(x: &[Elem], s: &Scenario) -> Result<usize, InnovateError> {
    Ok(is_innovative(x, s)?.into_iter().filter(|&b| b).count())
}

/// K linear forms in L variables, none identically zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForms {
    coeffs: Matrix,
}

impl LinearForms {
    pub fn new(coeffs: Matrix) -> Result<Self, InnovateError> {
        if let Some(k) = (0..coeffs.rows()).find(|&k| coeffs.row(k).iter().all(|&a| a == 0)) {
            return Err(InnovateError::ZeroForm(k));
        }
        Ok(LinearForms { coeffs })
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn eval(&self, x: &[Elem]) -> Vec<Elem> {
        let f = self.coeffs.field();
        self.coeffs.row_iter().map(|row| f.dot(row, x)).collect()
    }
}

/// Finds `x` with every form nonzero, assigning variables in order and
/// taking the smallest admissible value at each step.
pub fn sequential_assignment(forms: &LinearForms) -> Result<Vec<Elem>, InnovateError> {
    let a = &forms.coeffs;
    let f = a.field();
    let (k, l) = (a.rows(), a.cols());
    if k > f.q() as usize {
        return Err(InnovateError::TooManyForms { k, q: f.q() });
    }
    let mut x = vec![0; l];
    if let Some(col) = (0..l).find(|&c| (0..k).all(|r| a.get(r, c) != 0)) {
        x[col] = 1;
        return Ok(x);
    }
    let mut partial = vec![0 as Elem; k];
    for t in 0..l {
        let active: Vec<usize> = (0..k).filter(|&r| a.get(r, t) != 0).collect();
        if active.is_empty() {
            continue;
        }
        let v = f
            .elements()
            .find(|&v| {
                ops::record(active.len() as u64, active.len() as u64);
                active.iter().all(|&r| f.add(partial[r], f.mul(a.get(r, t), v)) != 0)
            })
            .expect("fewer than q constraints leave a feasible value");
        x[t] = v;
        if v != 0 {
            for &r in &active {
                partial[r] = f.add(partial[r], f.mul(a.get(r, t), v));
            }
        }
    }
    Ok(x)
}

/// Generation strategy for a coded packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Oh,
    Gh,
    GhSbes,
    FhSbes,
    Brute,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Oh => "oh",
            Method::Gh => "gh",
            Method::GhSbes => "gh-sbes",
            Method::FhSbes => "fh-sbes",
            Method::Brute => "brute",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = InnovateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "oh" => Method::Oh,
            "gh" => Method::Gh,
            "gh-sbes" => Method::GhSbes,
            "fh-sbes" => Method::FhSbes,
            "brute" => Method::Brute,
            _ => return Err(InnovateError::UnknownMethod(s.to_string())),
        })
    }
}

/// Runs `method` on the given users. `Brute` reports `Empty` when no
/// innovative vector exists.
pub fn generate_for(method: Method, users: &[&UserState], budget: u64) -> Result<Vec<Elem>, InnovateError> {
    match method {
        Method::Oh => hitting_generate(users, |inst| hitting::exact_hitting(inst, budget)),
        Method::Gh => hitting_generate(users, |inst| Ok(hitting::greedy_hitting(inst))),
        Method::GhSbes => {
            let (h, bhat) = choose_rows(users, |inst| Ok(hitting::greedy_hitting(inst)))?;
            sbes(&bhat, &h)
        }
        Method::FhSbes => {
            let first = users.first().ok_or(InnovateError::NoUsers)?;
            let all: Vec<usize> = (0..first.n()).collect();
            let bhat = first_rows(users, &all);
            sbes(&bhat, &all)
        }
        Method::Brute => {
            let first = users.first().ok_or(InnovateError::NoUsers)?;
            brute_innovative_users(first.field(), first.n(), users)?.ok_or(InnovateError::Empty)
        }
    }
}

pub fn generate(method: Method, s: &Scenario) -> Result<Vec<Elem>, InnovateError> {
    generate_for(method, &s.refs(), hitting::DEFAULT_NODE_BUDGET)
}

/// Optimal hitting: minimum-weight innovative vector (requires q >= K).
pub fn oh_generate(s: &Scenario) -> Result<Vec<Elem>, InnovateError> {
    generate(Method::Oh, s)
}

/// Greedy hitting: innovative vector within an H_N factor of the sparsest.
pub fn gh_generate(s: &Scenario) -> Result<Vec<Elem>, InnovateError> {
    generate(Method::Gh, s)
}

pub fn gh_sbes(s: &Scenario) -> Result<Vec<Elem>, InnovateError> {
    generate(Method::GhSbes, s)
}

pub fn fh_sbes(s: &Scenario) -> Result<Vec<Elem>, InnovateError> {
    generate(Method::FhSbes, s)
}

/// Hitting set of the users' support masks, then per user the first basis
/// row meeting it.
fn choose_rows(
    users: &[&UserState],
    solve: impl FnOnce(&HittingInstance) -> Result<hitting::HittingSolution, HittingError>,
) -> Result<(Vec<usize>, Matrix), InnovateError> {
    if users.is_empty() {
        return Err(InnovateError::NoUsers);
    }
    let masks: Vec<Vec<bool>> = users.iter().map(|u| u.btilde.clone()).collect();
    let inst = hitting::instance_from_btilde(&masks)?;
    let h = solve(&inst)?.hitting_set;
    let bhat = first_rows(users, &h);
    Ok((h, bhat))
}

fn first_rows(users: &[&UserState], h: &[usize]) -> Matrix {
    let n = users[0].n();
    let mut bhat = Matrix::zeros(users[0].field(), 0, n);
    for u in users {
        let row = u
            .b_basis
            .row_iter()
            .find(|row| h.iter().any(|&j| row[j] != 0))
            .expect("hitting set meets every support mask");
        bhat.push_row(row).expect("same width");
    }
    bhat
}

fn hitting_generate(
    users: &[&UserState],
    solve: impl FnOnce(&HittingInstance) -> Result<hitting::HittingSolution, HittingError>,
) -> Result<Vec<Elem>, InnovateError> {
    let (h, bhat) = choose_rows(users, solve)?;
    let forms = LinearForms::new(bhat.select_columns(&h))?;
    let y = sequential_assignment(&forms)?;
    let mut x = vec![0; bhat.cols()];
    for (&j, &v) in h.iter().zip(&y) {
        x[j] = v;
    }
    Ok(x)
}

/// Relaxed solve of `bhat(:, support) z = 1`: row echelon form, drop zero
/// and inconsistent rows, reduce, pivots take the right-hand side and free
/// variables are zero. The result is zero outside `support`.
pub fn sbes(bhat: &Matrix, support: &[usize]) -> Result<Vec<Elem>, InnovateError> {
    if support.is_empty() {
        return Err(InnovateError::EmptySupport);
    }
    let f = bhat.field().clone();
    let w = support.len();
    let mut q: Vec<Vec<Elem>> = bhat
        .row_iter()
        .map(|row| {
            let mut r: Vec<Elem> = support.iter().map(|&j| row[j]).collect();
            r.push(1);
            r
        })
        .collect();
    // forward elimination
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..w {
        let Some(p) = (r..q.len()).find(|&i| q[i][c] != 0) else {
            continue;
        };
        q.swap(r, p);
        let inv = f.inv(q[r][c]).expect("nonzero pivot");
        f.scale(&mut q[r], inv);
        let (top, rest) = q.split_at_mut(r + 1);
        for row in rest {
            if row[c] != 0 {
                let factor = f.neg(row[c]);
                f.axpy(row, factor, &top[r]);
            }
        }
        pivots.push(c);
        r += 1;
    }
    // rows past the last pivot are zero or [0 .. 0 | c]; both are dropped
    q.truncate(r);
    // back substitution to reduced form
    for i in (0..r).rev() {
        let c = pivots[i];
        let (top, rest) = q.split_at_mut(i);
        for row in top {
            if row[c] != 0 {
                let factor = f.neg(row[c]);
                f.axpy(row, factor, &rest[0]);
            }
        }
    }
    let mut x = vec![0; bhat.cols()];
    for (i, &c) in pivots.iter().enumerate() {
        x[support[c]] = q[i][w];
    }
    Ok(x)
}

/// Sparse nonzero pattern of every user's basis rows, for fast enumeration.
struct SparseBases {
    field: Field,
    users: Vec<Vec<Vec<(usize, Elem)>>>,
}

impl SparseBases {
    fn new(field: &Field, users: &[&UserState]) -> Self {
        SparseBases {
            field: field.clone(),
            users: users
                .iter()
                .map(|u| {
                    u.b_basis
                        .row_iter()
                        .map(|row| row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, &v)| (j, v)).collect())
                        .collect()
                })
                .collect(),
        }
    }

    fn innovative_to_all(&self, x: &[Elem]) -> bool {
        let f = &self.field;
        self.users.iter().all(|rows| {
            rows.iter().any(|row| {
                row.iter().fold(0, |acc, &(j, v)| if x[j] == 0 { acc } else { f.add(acc, f.mul(v, x[j])) }) != 0
            })
        })
    }
}

fn space_size(q: u32, n: usize) -> u64 {
    (q as u64).checked_pow(n as u32).unwrap_or(u64::MAX)
}

fn brute_innovative_users(field: &Field, n: usize, users: &[&UserState]) -> Result<Option<Vec<Elem>>, InnovateError> {
    let total = space_size(field.q(), n);
    if total > BRUTE_LIMIT {
        return Err(InnovateError::TooLarge(total));
    }
    let bases = SparseBases::new(field, users);
    let q = field.q() as Elem;
    let mut x = vec![0 as Elem; n];
    loop {
        if bases.innovative_to_all(&x) {
            return Ok(Some(x));
        }
        // odometer with the last coordinate fastest
        let Some(i) = (0..n).rev().find(|&i| x[i] + 1 < q) else {
            return Ok(None);
        };
        x[i] += 1;
        x[i + 1..].iter_mut().for_each(|v| *v = 0);
    }
}

/// Lexicographically smallest innovative vector, or `None` if there is none.
pub fn brute_force_innovative(s: &Scenario) -> Result<Option<Vec<Elem>>, InnovateError> {
    brute_innovative_users(&s.field, s.n, &s.refs())
}

/// Sparsity number and a witness, enumerating supports by increasing size.
/// The limit applies to the number of candidates examined.
pub fn brute_force_sparsity(s: &Scenario) -> Result<(usize, Vec<Elem>), InnovateError> {
    let n = s.n;
    let q = s.field.q() as Elem;
    let bases = SparseBases::new(&s.field, &s.refs());
    let mut examined: u64 = 0;
    let mut x = vec![0 as Elem; n];
    for w in 1..=n {
        let mut support: Vec<usize> = (0..w).collect();
        loop {
            let mut vals = vec![1 as Elem; w];
            loop {
                examined += 1;
                if examined > BRUTE_LIMIT {
                    return Err(InnovateError::TooLarge(examined));
                }
                for (&j, &v) in support.iter().zip(&vals) {
                    x[j] = v;
                }
                if bases.innovative_to_all(&x) {
                    return Ok((w, x));
                }
                let Some(i) = (0..w).rev().find(|&i| vals[i] + 1 < q) else {
                    break;
                };
                vals[i] += 1;
                vals[i + 1..].iter_mut().for_each(|v| *v = 1);
            }
            support.iter().for_each(|&j| x[j] = 0);
            if !hitting::next_combination(&mut support, n) {
                break;
            }
        }
    }
    Err(InnovateError::Empty)
}

/// `q + 1` users whose row spaces cover `GF(q)^N`: each holds
/// `e_1 .. e_{N-2}` plus a representative of a distinct line of the
/// quotient by their span.
pub fn gen_appendix_a(field: &Field, n: usize) -> Result<Scenario, InnovateError> {
    if n < 2 {
        return Err(InnovateError::Parse("N must be at least 2".into()));
    }
    let q = field.q() as Elem;
    // lines through the origin of GF(q)^2, smallest representative first
    let mut reps: Vec<(Elem, Elem)> = vec![(0, 1)];
    reps.extend((0..q).map(|b| (1, b)));
    let cs = reps
        .iter()
        .map(|&(a, b)| {
            let mut rows: Vec<Vec<Elem>> = (0..n - 2)
                .map(|i| {
                    let mut e = vec![0; n];
                    e[i] = 1;
                    e
                })
                .collect();
            let mut u = vec![0; n];
            u[n - 2] = a;
            u[n - 1] = b;
            rows.push(u);
            Matrix::from_rows(field, n, &rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Scenario::from_c_matrices(field, n, &cs)
}

/// A 3-CNF formula over variables `1..=n`; literals are signed indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub n: usize,
    pub clauses: Vec<[i32; 3]>,
}

impl Cnf {
    pub fn eval(&self, assign: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| assign[l.unsigned_abs() as usize - 1] == (l > 0)))
    }

    /// First satisfying assignment in binary counting order, if any.
    pub fn solve(&self) -> Option<Vec<bool>> {
        assert!(self.n < 32, "enumeration limited to 31 variables");
        (0u32..1 << self.n)
            .map(|m| (0..self.n).map(|i| m >> i & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.eval(a))
    }
}

impl fmt::Display for Cnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.n, self.clauses.len())?;
        for c in &self.clauses {
            writeln!(f, "{} {} {} 0", c[0], c[1], c[2])?;
        }
        Ok(())
    }
}

impl FromStr for Cnf {
    type Err = InnovateError;

    /// DIMACS with exactly three literals per clause.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| InnovateError::Parse(m);
        let mut n = None;
        let mut lits = Vec::new();
        for line in s.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p cnf") {
                let v: Vec<usize> = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad(format!("bad header {line:?}"))))
                    .collect::<Result<_, _>>()?;
                n = Some(*v.first().ok_or_else(|| bad("header lacks variable count".into()))?);
                continue;
            }
            for t in line.split_whitespace() {
                lits.push(t.parse::<i32>().map_err(|_| bad(format!("bad literal {t:?}")))?);
            }
        }
        let n = n.ok_or_else(|| bad("missing `p cnf` header".into()))?;
        let mut clauses = Vec::new();
        for clause in lits.split(|&l| l == 0).filter(|c| !c.is_empty()) {
            let [a, b, c] = clause[..] else {
                return Err(bad(format!("clause {clause:?} does not have three literals")));
            };
            if [a, b, c].iter().any(|l| l.unsigned_abs() as usize > n) {
                return Err(bad(format!("clause {clause:?} mentions a variable above {n}")));
            }
            clauses.push([a, b, c]);
        }
        Ok(Cnf { n, clauses })
    }
}

/// Scenario over `GF(q)` with `N = n + 1` whose innovative vectors exist iff
/// the formula is satisfiable. Users are given by their null-space bases:
/// one per clause, one forcing the last coordinate nonzero and, for `q > 2`,
/// one per variable and extra field element pinning `x_u` to `{0, x_{n+1}}`.
pub fn reduce_3sat(cnf: &Cnf, field: &Field) -> Result<Scenario, InnovateError> {
    let n = cnf.n + 1;
    let minus_one = field.neg(1);
    let unit = |i: usize| {
        let mut e = vec![0 as Elem; n];
        e[i] = 1;
        e
    };
    let mut bs = Vec::new();
    for clause in &cnf.clauses {
        let rows: Vec<Vec<Elem>> = clause
            .iter()
            .map(|&l| {
                let mut row = unit(l.unsigned_abs() as usize - 1);
                if l < 0 {
                    row[n - 1] = minus_one;
                }
                row
            })
            .collect();
        bs.push(Matrix::from_rows(field, n, &rows)?);
    }
    bs.push(Matrix::from_rows(field, n, &[unit(n - 1)])?);
    for u in 0..cnf.n {
        for a in field.elements().filter(|&a| a > 1) {
            let mut row = vec![0 as Elem; n];
            row[u] = a;
            row[n - 1] = minus_one;
            bs.push(Matrix::from_rows(field, n, &[row])?);
        }
    }
    Scenario::from_b_matrices(field, n, &bs)
}
