//! Sparse symmetric linear algebra: CSC storage, a fill-reducing nested
//! dissection ordering, and an LDLᵀ factorization with iterative refinement.
//!
//! The factorization is the classic up-looking simplicial algorithm
//! (elimination tree + sparse triangular solve per pivot row) on the
//! permuted upper triangle. Saddle-point systems are handled by
//! quasi-definite regularization: a small shift `−δ` is added to the
//! diagonal of the rows marked "negative" (pressure / multiplier blocks),
//! which makes every pivot nonzero regardless of elimination order, and the
//! committed error is then removed by iterative refinement against the
//! unshifted matrix. SPD systems pass `neg = None` and factor untouched.
//!
//! The ordering is geometric nested dissection: dofs are split by the
//! coordinate median, the boundary layer of the second half becomes the
//! separator and is eliminated last. For 2D mesh graphs this keeps fill at
//! `O(n log n)` and factorization comfortably subsecond at the problem
//! sizes the optimizer produces (≤ ~2·10⁵ unknowns).

/// Compressed sparse column matrix (values may represent a full symmetric
/// matrix; routines state what they expect).
#[derive(Debug, Clone)]
pub struct Csc {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowidx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csc {
    /// y = A·x (treats the stored entries verbatim).
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowidx[p]] += self.values[p] * xj;
            }
        }
    }

    /// Entry (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        for p in self.colptr[j]..self.colptr[j + 1] {
            if self.rowidx[p] == i {
                return self.values[p];
            }
        }
        0.0
    }

    pub fn nnz(&self) -> usize {
        self.rowidx.len()
    }
}

/// Triplet accumulator; duplicate entries sum on conversion.
#[derive(Debug, Clone)]
pub struct Triplets {
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets { n, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.rows.push(i);
        self.cols.push(j);
        self.vals.push(v);
    }

    pub fn into_csc(self) -> Csc {
        let (pattern, slots) = csc_pattern(self.n, &self.rows, &self.cols);
        let mut csc = pattern;
        scatter(&slots, &self.vals, &mut csc.values);
        csc
    }
}

/// Builds the CSC pattern of a triplet list (values zeroed) together with
/// the slot map: entry `k` of the triplet list accumulates into
/// `values[slots[k]]`. Splitting pattern from values lets assembly reuse the
/// structure when only coefficients change between solves.
pub fn csc_pattern(n: usize, rows: &[usize], cols: &[usize]) -> (Csc, Vec<usize>) {
    assert_eq!(rows.len(), cols.len());
    let nnz_in = rows.len();
    // Sort triplet indices by (col, row).
    let mut order: Vec<u32> = (0..nnz_in as u32).collect();
    order.sort_unstable_by_key(|&k| (cols[k as usize], rows[k as usize]));
    let mut colptr = vec![0usize; n + 1];
    let mut rowidx = Vec::with_capacity(nnz_in);
    let mut slots = vec![0usize; nnz_in];
    let mut last: Option<(usize, usize)> = None;
    for &k in &order {
        let (i, j) = (rows[k as usize], cols[k as usize]);
        if last != Some((i, j)) {
            rowidx.push(i);
            colptr[j + 1] += 1;
            last = Some((i, j));
        }
        slots[k as usize] = rowidx.len() - 1;
    }
    for j in 0..n {
        colptr[j + 1] += colptr[j];
    }
    let values = vec![0.0; rowidx.len()];
    (Csc { n, colptr, rowidx, values }, slots)
}

/// Accumulates triplet values into pattern slots (see [`csc_pattern`]).
pub fn scatter(slots: &[usize], vals: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (s, v) in slots.iter().zip(vals) {
        out[*s] += v;
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("matrix is singular or numerically indefinite beyond repair (pivot {pivot} at elimination step {step})")]
    BreakDown { step: usize, pivot: f64 },
    #[error("iterative refinement stalled at relative residual {rel:.3e} (target {target:.1e}); the system is singular or severely ill-conditioned")]
    RefinementStall { rel: f64, target: f64 },
}

/// Geometric nested dissection ordering. Returns `perm` with `perm[k]` the
/// original index eliminated at step `k`. `force_last` lists rows that
/// couple to (nearly) everything — e.g. a mean-value gauge row — which are
/// pulled out of the recursion and eliminated at the very end, where their
/// dense rows cost only O(n).
pub fn nested_dissection(adj: &Csc, coords: &[[f64; 2]], force_last: &[usize]) -> Vec<usize> {
    let n = adj.n;
    let mut skip = vec![false; n];
    for &v in force_last {
        skip[v] = true;
    }
    let mut nodes: Vec<usize> = (0..n).filter(|&v| !skip[v]).collect();
    let mut perm = Vec::with_capacity(n);
    let mut stamp = vec![0u32; n];
    let mut epoch = 0u32;
    recurse(adj, coords, &skip, &mut nodes, &mut perm, &mut stamp, &mut epoch);
    perm.extend_from_slice(force_last);
    debug_assert_eq!(perm.len(), n);
    perm
}

const ND_LEAF: usize = 48;

fn recurse(
    adj: &Csc,
    coords: &[[f64; 2]],
    skip: &[bool],
    nodes: &mut [usize],
    perm: &mut Vec<usize>,
    stamp: &mut [u32],
    epoch: &mut u32,
) {
    if nodes.len() <= ND_LEAF {
        nodes.sort_unstable();
        perm.extend_from_slice(nodes);
        return;
    }
    // Split across the wider bounding-box direction at the median.
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &v in nodes.iter() {
        for d in 0..2 {
            lo[d] = lo[d].min(coords[v][d]);
            hi[d] = hi[d].max(coords[v][d]);
        }
    }
    let axis = usize::from(hi[1] - lo[1] > hi[0] - lo[0]);
    nodes.sort_unstable_by(|&a, &b| {
        let ka = (coords[a][axis], coords[a][1 - axis], a);
        let kb = (coords[b][axis], coords[b][1 - axis], b);
        ka.partial_cmp(&kb).unwrap()
    });
    let half = nodes.len() / 2;
    *epoch += 1;
    let e = *epoch;
    for &v in &nodes[..half] {
        stamp[v] = e;
    }
    // Separator: nodes of the second half adjacent to the first half.
    let (a_side, b_side) = nodes.split_at_mut(half);
    let mut interior_b = Vec::with_capacity(b_side.len());
    let mut separator = Vec::new();
    for &v in b_side.iter() {
        let touches_a = (adj.colptr[v]..adj.colptr[v + 1])
            .any(|p| !skip[adj.rowidx[p]] && stamp[adj.rowidx[p]] == e);
        if touches_a {
            separator.push(v);
        } else {
            interior_b.push(v);
        }
    }
    if separator.len() == b_side.len() && interior_b.is_empty() {
        // No progress possible (graph too dense here); stop recursing.
        a_side.sort_unstable();
        perm.extend_from_slice(a_side);
        separator.sort_unstable();
        perm.extend_from_slice(&separator);
        return;
    }
    recurse(adj, coords, skip, a_side, perm, stamp, epoch);
    recurse(adj, coords, skip, &mut interior_b, perm, stamp, epoch);
    separator.sort_unstable();
    perm.extend_from_slice(&separator);
}

/// Elimination-tree symbolic analysis of the permuted upper triangle.
#[derive(Debug)]
pub struct LdltSymbolic {
    n: usize,
    perm: Vec<usize>,
    parent: Vec<i64>,
    lcolptr: Vec<usize>,
    // Permuted strict-or-not upper triangle of A, plus the map from its
    // entries back into the source matrix's value array.
    up_colptr: Vec<usize>,
    up_rowidx: Vec<usize>,
    up_src: Vec<usize>,
}

impl LdltSymbolic {
    /// Analyzes the full symmetric matrix `a` under the ordering `perm`.
    pub fn analyze(a: &Csc, perm: Vec<usize>) -> LdltSymbolic {
        let n = a.n;
        assert_eq!(perm.len(), n);
        let mut iperm = vec![0usize; n];
        for (k, &old) in perm.iter().enumerate() {
            iperm[old] = k;
        }
        // Permuted upper triangle: entry (i, j) of A with pi = iperm[i],
        // pj = iperm[j] lands at (min, max); the full matrix stores each
        // unordered pair twice, and exactly one of the two passes pi <= pj.
        let mut colcount = vec![0usize; n + 1];
        for j in 0..n {
            for p in a.colptr[j]..a.colptr[j + 1] {
                let (pi, pj) = (iperm[a.rowidx[p]], iperm[j]);
                if pi <= pj {
                    colcount[pj + 1] += 1;
                }
            }
        }
        let mut up_colptr = colcount;
        for j in 0..n {
            up_colptr[j + 1] += up_colptr[j];
        }
        let nnz_up = up_colptr[n];
        let mut up_rowidx = vec![0usize; nnz_up];
        let mut up_src = vec![0usize; nnz_up];
        let mut next = up_colptr.clone();
        for j in 0..n {
            for p in a.colptr[j]..a.colptr[j + 1] {
                let (pi, pj) = (iperm[a.rowidx[p]], iperm[j]);
                if pi <= pj {
                    let q = next[pj];
                    up_rowidx[q] = pi;
                    up_src[q] = p;
                    next[pj] += 1;
                }
            }
        }
        // Elimination tree and column counts of L.
        let mut parent = vec![-1i64; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            for p in up_colptr[k]..up_colptr[k + 1] {
                let mut i = up_rowidx[p];
                while flag[i] != k {
                    if parent[i] == -1 {
                        parent[i] = k as i64;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i] as usize;
                }
            }
        }
        let mut lcolptr = vec![0usize; n + 1];
        for k in 0..n {
            lcolptr[k + 1] = lcolptr[k] + lnz[k];
        }
        LdltSymbolic { n, perm, parent, lcolptr, up_colptr, up_rowidx, up_src }
    }

    pub fn l_nnz(&self) -> usize {
        self.lcolptr[self.n]
    }
}

/// Numeric LDLᵀ factor (unit lower triangular L, diagonal D).
#[derive(Debug)]
pub struct LdltFactor {
    l_rowidx: Vec<usize>,
    l_values: Vec<f64>,
    d: Vec<f64>,
}

/// Factorizes the matrix whose values live in `a_values` (laid out as the
/// matrix passed to [`LdltSymbolic::analyze`]). `diag_shift[old_index]`, if
/// present, is added to the diagonal — the quasi-definite regularization.
pub fn ldlt_factor(
    sym: &LdltSymbolic,
    a_values: &[f64],
    diag_shift: Option<&[f64]>,
) -> Result<LdltFactor, SolveError> {
    let n = sym.n;
    let mut l_rowidx = vec![0usize; sym.l_nnz()];
    let mut l_values = vec![0.0f64; sym.l_nnz()];
    let mut d = vec![0.0f64; n];
    let mut y = vec![0.0f64; n];
    let mut lnz_used = vec![0usize; n];
    let mut flag = vec![usize::MAX; n];
    let mut pattern = vec![0usize; n];
    let mut stack = vec![0usize; n];
    // Pivot floor: relative to the largest diagonal magnitude.
    let mut scale = 0.0f64;
    for k in 0..n {
        for p in sym.up_colptr[k]..sym.up_colptr[k + 1] {
            if sym.up_rowidx[p] == k {
                scale = scale.max(a_values[sym.up_src[p]].abs());
            }
        }
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    let floor = scale * 1e-280;

    for k in 0..n {
        let mut top = n;
        flag[k] = k;
        for p in sym.up_colptr[k]..sym.up_colptr[k + 1] {
            let entry = sym.up_rowidx[p];
            y[entry] += a_values[sym.up_src[p]];
            let mut len = 0;
            let mut i = entry;
            while flag[i] != k {
                stack[len] = i;
                len += 1;
                flag[i] = k;
                i = sym.parent[i] as usize;
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = stack[len];
            }
        }
        let mut dk = y[k];
        if let Some(shift) = diag_shift {
            dk += shift[sym.perm[k]];
        }
        y[k] = 0.0;
        for t in top..n {
            let i = pattern[t];
            let yi = y[i];
            y[i] = 0.0;
            let p2 = sym.lcolptr[i] + lnz_used[i];
            for p in sym.lcolptr[i]..p2 {
                y[l_rowidx[p]] -= l_values[p] * yi;
            }
            let l_ki = yi / d[i];
            dk -= l_ki * yi;
            l_rowidx[p2] = k;
            l_values[p2] = l_ki;
            lnz_used[i] += 1;
        }
        if !dk.is_finite() {
            return Err(SolveError::BreakDown { step: k, pivot: dk });
        }
        if dk.abs() < floor {
            // Exactly singular pivot (e.g. an unconstrained gauge mode):
            // substitute a tiny pivot and let iterative refinement expose
            // the problem if the system is genuinely singular.
            dk = if dk < 0.0 { -floor } else { floor };
        }
        d[k] = dk;
    }
    Ok(LdltFactor { l_rowidx, l_values, d })
}

/// Applies the factor: takes `b` in original ordering and leaves the solution
/// in `x` in *permuted* ordering (the caller scatters through `perm`).
fn ldlt_apply(sym: &LdltSymbolic, f: &LdltFactor, b: &[f64], x: &mut [f64]) {
    let n = sym.n;
    // x = P b
    for k in 0..n {
        x[k] = b[sym.perm[k]];
    }
    // L y = x
    for j in 0..n {
        let xj = x[j];
        if xj != 0.0 {
            for p in sym.lcolptr[j]..sym.lcolptr[j + 1] {
                x[f.l_rowidx[p]] -= f.l_values[p] * xj;
            }
        }
    }
    // D z = y
    for j in 0..n {
        x[j] /= f.d[j];
    }
    // Lᵀ w = z
    for j in (0..n).rev() {
        let mut xj = x[j];
        for p in sym.lcolptr[j]..sym.lcolptr[j + 1] {
            xj -= f.l_values[p] * x[f.l_rowidx[p]];
        }
        x[j] = xj;
    }
}

/// A factorized symmetric system with iterative refinement against the
/// unshifted matrix. Reusable across solves; `refactor` updates the numeric
/// factor when the matrix values (not the pattern) change.
pub struct SymmetricSolver {
    sym: LdltSymbolic,
    factor: LdltFactor,
    diag_shift: Option<Vec<f64>>,
    /// Relative-residual target for refinement.
    pub target: f64,
    /// Residual level above which a solve is declared failed.
    pub fail_above: f64,
}

impl SymmetricSolver {
    /// Analyzes and factorizes `a` (full symmetric CSC). `neg` marks the
    /// quasi-definite "negative" rows (their diagonal is shifted by `−δ`
    /// with `δ` scaled off the matrix); pass `None` for definite systems.
    /// `coords` drive the fill-reducing ordering; `force_last` as in
    /// [`nested_dissection`].
    pub fn new(
        a: &Csc,
        coords: &[[f64; 2]],
        neg: Option<&[bool]>,
        force_last: &[usize],
    ) -> Result<SymmetricSolver, SolveError> {
        let perm = nested_dissection(a, coords, force_last);
        let sym = LdltSymbolic::analyze(a, perm);
        let diag_shift = neg.map(|neg| {
            let mut scale = 0.0f64;
            for j in 0..a.n {
                scale = scale.max(a.get(j, j).abs());
            }
            if scale == 0.0 {
                scale = 1.0;
            }
            let delta = 1e-10 * scale;
            neg.iter().map(|&is_neg| if is_neg { -delta } else { 0.0 }).collect::<Vec<f64>>()
        });
        let factor = ldlt_factor(&sym, &a.values, diag_shift.as_deref())?;
        Ok(SymmetricSolver { sym, factor, diag_shift, target: 5e-14, fail_above: 1e-10 })
    }

    /// Re-factorizes with new values on the same pattern.
    pub fn refactor(&mut self, a_values: &[f64]) -> Result<(), SolveError> {
        self.factor = ldlt_factor(&self.sym, a_values, self.diag_shift.as_deref())?;
        Ok(())
    }

    /// Solves `a x = b` where `a` is the (unshifted) matrix the current
    /// factor was computed from. Returns the solution and the final
    /// relative residual ‖b − Ax‖₂/‖b‖₂.
    pub fn solve(&self, a: &Csc, b: &[f64]) -> Result<(Vec<f64>, f64), SolveError> {
        let n = self.sym.n;
        let mut x = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut r = b.to_vec();
        let norm_b = norm2(b).max(f64::MIN_POSITIVE);
        let mut rel = f64::INFINITY;
        let mut ax = vec![0.0; n];
        for _ in 0..30 {
            // z = A⁻¹ r (via the factor), x += z
            ldlt_apply(&self.sym, &self.factor, &r, &mut z);
            for k in 0..n {
                x[self.sym.perm[k]] += z[k];
            }
            a.mul_vec(&x, &mut ax);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            let new_rel = norm2(&r) / norm_b;
            if new_rel <= self.target {
                return Ok((x, new_rel));
            }
            if new_rel >= 0.5 * rel {
                // Stalled.
                rel = new_rel.min(rel);
                break;
            }
            rel = new_rel;
        }
        if rel <= self.fail_above {
            return Ok((x, rel));
        }
        Err(SolveError::RefinementStall { rel, target: self.fail_above })
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
