//! Exact linear programming for fractional edge covers.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::bitset::VertexSet;
use crate::error::{cap, Error, Result};
use crate::hypergraph::Hypergraph;
use crate::rational::Rational;

/// `max c·y` subject to `A y <= b`, `y >= 0`, with `b >= 0`, by the primal
/// simplex method started at the origin. Bland's rule prevents cycling.
/// Returns the optimum and an optimal `y`.
pub fn maximize(
    a: &[Vec<Rational>],
    b: &[Rational],
    c: &[Rational],
) -> Result<(Rational, Vec<Rational>)> {
    let m = a.len();
    let n = c.len();
    if b.iter().any(|x| x.is_negative()) {
        return Err(Error::Precondition(
            "right-hand side must be non-negative".into(),
        ));
    }
    let width = n + m;
    // tableau rows: [coeffs | rhs]
    let mut t: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![Rational::zero(); width + 1];
        for j in 0..n {
            row[j] = a[i][j].clone();
        }
        row[n + i] = Rational::one();
        row[width] = b[i].clone();
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..width).collect();
    // reduced costs c_j - z_j
    let mut cost = vec![Rational::zero(); width + 1];
    for j in 0..n {
        cost[j] = c[j].clone();
    }
    loop {
        let Some(enter) = (0..width).find(|&j| cost[j].is_positive()) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best: Option<Rational> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let r = &t[i][width] / &t[i][enter];
                let better = match &best {
                    None => true,
                    Some(b) => r < *b || (r == *b && basis[i] < basis[leave.unwrap()]),
                };
                if better {
                    best = Some(r);
                    leave = Some(i);
                }
            }
        }
        let Some(p) = leave else {
            return Err(Error::Invariant(
                "fractional cover dual is unbounded".into(),
            ));
        };
        let piv = t[p][enter].clone();
        for x in t[p].iter_mut() {
            *x /= &piv;
        }
        let prow = t[p].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != p && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (x, y) in row.iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
            }
        }
        if !cost[enter].is_zero() {
            let f = cost[enter].clone();
            for (x, y) in cost.iter_mut().zip(&prow) {
                *x -= &f * y;
            }
        }
        basis[p] = enter;
    }
    let mut y = vec![Rational::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            y[bv] = t[i][width].clone();
        }
    }
    let opt = y
        .iter()
        .zip(c)
        .fold(Rational::zero(), |s, (a, b)| s + a * b);
    Ok((opt, y))
}

/// Distinct non-empty traces `e ∩ U`.
pub(crate) fn traces(h: &Hypergraph, u: VertexSet) -> Vec<VertexSet> {
    let mut ts: Vec<VertexSet> = h
        .edges()
        .iter()
        .map(|&e| e & u)
        .filter(|t| !t.is_empty())
        .collect();
    ts.sort_unstable();
    ts.dedup();
    ts
}

/// `rho*(U)` through its dual, the fractional packing of `U` against the edges.
pub fn fractional_cover_simplex(h: &Hypergraph, u: VertexSet) -> Rational {
    if u.is_empty() {
        return Rational::zero();
    }
    let vs: Vec<usize> = u.iter().collect();
    let rows: Vec<Vec<Rational>> = traces(h, u)
        .into_iter()
        .map(|t| {
            vs.iter()
                .map(|&v| {
                    if t.contains(v) {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect();
    let b = vec![Rational::one(); rows.len()];
    let c = vec![Rational::one(); vs.len()];
    maximize(&rows, &b, &c)
        .expect("packing LP over a cover is bounded")
        .0
}

/// Solves the square system `m x = r`; `None` when singular.
fn solve(mut m: Vec<Vec<Rational>>, mut r: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = r.len();
    for col in 0..n {
        let p = (col..n).find(|&i| !m[i][col].is_zero())?;
        m.swap(col, p);
        r.swap(col, p);
        let piv = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x /= &piv;
        }
        r[col] /= &piv;
        for i in 0..n {
            if i != col && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                let prow = m[col].clone();
                for (x, y) in m[i].iter_mut().zip(&prow) {
                    *x -= &f * y;
                }
                let rc = r[col].clone();
                r[i] -= f * rc;
            }
        }
    }
    Some(r)
}

/// `rho*(U)` from the primal covering LP `min Σλ_e, Σ_{e∋v} λ_e >= 1, 0 <= λ <= 1`
/// by enumerating every basic solution. Independent of the simplex route;
/// exponential, so the number of edges meeting `U` is capped.
pub fn fractional_cover_vertex_enumeration(
    h: &Hypergraph,
    u: VertexSet,
    max_edges: usize,
) -> Result<Rational> {
    if u.is_empty() {
        return Ok(Rational::zero());
    }
    let edges: Vec<VertexSet> = h
        .edges()
        .iter()
        .copied()
        .filter(|e| e.intersects(u))
        .collect();
    cap("edges meeting U", edges.len(), max_edges)?;
    let vs: Vec<usize> = u.iter().collect();
    let m = edges.len();
    let coeff = |v: usize, e: usize| {
        if edges[e].contains(v) {
            Rational::one()
        } else {
            Rational::zero()
        }
    };
    let mut best: Option<Rational> = None;
    // each edge variable is fixed at 0, fixed at 1, or free; free count = tight cover rows
    let mut state = vec![0u8; m];
    loop {
        let free: Vec<usize> = (0..m).filter(|&e| state[e] == 2).collect();
        let fixed_one: Vec<usize> = (0..m).filter(|&e| state[e] == 1).collect();
        if free.len() <= vs.len() {
            for rows in combinations(vs.len(), free.len()) {
                let mat: Vec<Vec<Rational>> = rows
                    .iter()
                    .map(|&i| free.iter().map(|&e| coeff(vs[i], e)).collect())
                    .collect();
                let rhs: Vec<Rational> = rows
                    .iter()
                    .map(|&i| {
                        Rational::one()
                            - fixed_one
                                .iter()
                                .fold(Rational::zero(), |s, &e| s + coeff(vs[i], e))
                    })
                    .collect();
                let Some(sol) = solve(mat, rhs) else { continue };
                let mut lam = vec![Rational::zero(); m];
                for &e in &fixed_one {
                    lam[e] = Rational::one();
                }
                for (k, &e) in free.iter().enumerate() {
                    lam[e] = sol[k].clone();
                }
                if lam.iter().any(|x| x.is_negative() || *x > Rational::one()) {
                    continue;
                }
                let feasible = vs.iter().all(|&v| {
                    (0..m).fold(Rational::zero(), |s, e| s + coeff(v, e) * &lam[e])
                        >= Rational::one()
                });
                if !feasible {
                    continue;
                }
                let obj = lam.iter().fold(Rational::zero(), |s, x| s + x);
                if best.as_ref().is_none_or(|b| obj < *b) {
                    best = Some(obj);
                }
            }
        }
        // next state in base 3
        let mut i = 0;
        while i < m && state[i] == 2 {
            state[i] = 0;
            i += 1;
        }
        if i == m {
            break;
        }
        state[i] += 1;
    }
    best.ok_or_else(|| Error::Invariant("covering polytope has no vertex".into()))
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}
