//! Exact integer feasibility for conjunctions of linear constraints.
//!
//! Fourier–Motzkin elimination with integer tightening: equalities are
//! eliminated by substitution (using the symmetric-modulo reduction when no
//! unit coefficient exists), inequalities by real/dark shadows, and the gap
//! between the two shadows is closed by splintering into equalities. Every
//! satisfiable answer carries an integer model built by back-substitution.

use std::collections::BTreeMap;
use std::time::Instant;

/// `Σ coeffs[i]·x_i + c`
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Row {
    pub coeffs: Vec<i128>,
    pub c: i128,
}

impl Row {
    fn eval(&self, model: &[i128]) -> i128 {
        self.coeffs.iter().zip(model).map(|(a, x)| a * x).sum::<i128>() + self.c
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct System {
    pub nvars: usize,
    /// rows constrained `== 0`
    pub eqs: Vec<Row>,
    /// rows constrained `>= 0`
    pub geqs: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Abort {
    Budget,
    Timeout,
}

pub(crate) struct Omega {
    budget: usize,
    used: usize,
    deadline: Instant,
}

const COEFF_LIMIT: i128 = 1 << 60;

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

/// Symmetric residue in `[-m/2, m/2)`.
fn mod_hat(a: i128, m: i128) -> i128 {
    a - m * floor_div(2 * a + m, 2 * m)
}

/// `target += k * src` on every coefficient except `skip`, which is cleared.
fn fold_in(target: &mut Row, src: &Row, k: i128, skip: usize) -> Result<(), Abort> {
    target.coeffs[skip] = 0;
    for (i, (t, s)) in target.coeffs.iter_mut().zip(&src.coeffs).enumerate() {
        if i == skip {
            continue;
        }
        *t = t.checked_add(s.checked_mul(k).ok_or(Abort::Budget)?).ok_or(Abort::Budget)?;
        if t.abs() > COEFF_LIMIT {
            return Err(Abort::Budget);
        }
    }
    target.c = target
        .c
        .checked_add(src.c.checked_mul(k).ok_or(Abort::Budget)?)
        .ok_or(Abort::Budget)?;
    Ok(())
}

fn substitute(sys: &mut System, var: usize, def: &Row) -> Result<(), Abort> {
    for row in sys.eqs.iter_mut().chain(sys.geqs.iter_mut()) {
        let k = row.coeffs[var];
        if k != 0 {
            fold_in(row, def, k, var)?;
        }
    }
    Ok(())
}

/// `b*lower + a*upper`, eliminating `var`.
fn combine(lower: &Row, upper: &Row, var: usize, slack: i128) -> Result<Row, Abort> {
    let a = lower.coeffs[var];
    let b = -upper.coeffs[var];
    let mut out = Row {
        coeffs: lower.coeffs.iter().map(|x| x * b).collect(),
        c: lower.c.checked_mul(b).ok_or(Abort::Budget)?,
    };
    fold_in(&mut out, upper, a, var)?;
    out.c -= slack;
    Ok(out)
}

impl Omega {
    pub fn new(budget: usize, deadline: Instant) -> Self {
        Omega {
            budget,
            used: 0,
            deadline,
        }
    }

    fn tick(&mut self, n: usize) -> Result<(), Abort> {
        self.used += n.max(1);
        if self.used > self.budget {
            return Err(Abort::Budget);
        }
        if Instant::now() > self.deadline {
            return Err(Abort::Timeout);
        }
        Ok(())
    }

    /// Returns an integer model (indexed like the variables) or `None` when
    /// the system has no integer solution.
    pub fn solve(&mut self, mut sys: System) -> Result<Option<Vec<i128>>, Abort> {
        self.tick(sys.eqs.len() + sys.geqs.len())?;
        if !normalize(&mut sys) {
            return Ok(None);
        }
        if let Some(eq) = sys.eqs.pop() {
            return self.eliminate_eq(sys, eq);
        }
        if sys.geqs.is_empty() {
            return Ok(Some(vec![0; sys.nvars]));
        }
        self.eliminate_geq(sys)
    }

    fn eliminate_eq(&mut self, mut sys: System, eq: Row) -> Result<Option<Vec<i128>>, Abort> {
        let n = sys.nvars;
        if let Some(k) = (0..n).find(|&i| eq.coeffs[i].abs() == 1) {
            // x_k = -a_k * (rest)
            let ak = eq.coeffs[k];
            let mut def = Row {
                coeffs: eq.coeffs.iter().map(|a| -ak * a).collect(),
                c: -ak * eq.c,
            };
            def.coeffs[k] = 0;
            substitute(&mut sys, k, &def)?;
            let Some(mut model) = self.solve(sys)? else {
                return Ok(None);
            };
            model[k] = def.eval(&model);
            return Ok(Some(model));
        }

        let k = (0..n)
            .filter(|&i| eq.coeffs[i] != 0)
            .min_by_key(|&i| (eq.coeffs[i].abs(), i))
            .expect("normalized equality has a variable");
        let ak = eq.coeffs[k];
        let m = ak.abs() + 1;
        let sigma = n;
        sys.nvars += 1;
        for row in sys.eqs.iter_mut().chain(sys.geqs.iter_mut()) {
            row.coeffs.push(0);
        }
        let mut eq = eq;
        eq.coeffs.push(0);
        // x_k = sign(a_k) * (Σ_{i≠k} â_i x_i + ĉ - m σ)
        let sign = ak.signum();
        let mut def = Row {
            coeffs: eq.coeffs.iter().map(|&a| sign * mod_hat(a, m)).collect(),
            c: sign * mod_hat(eq.c, m),
        };
        def.coeffs[k] = 0;
        def.coeffs[sigma] = -sign * m;
        let mut reduced = eq;
        let kk = reduced.coeffs[k];
        fold_in(&mut reduced, &def, kk, k)?;
        substitute(&mut sys, k, &def)?;
        sys.eqs.push(reduced);
        let Some(mut model) = self.solve(sys)? else {
            return Ok(None);
        };
        model[k] = def.eval(&model);
        model.truncate(n);
        Ok(Some(model))
    }

    fn eliminate_geq(&mut self, sys: System) -> Result<Option<Vec<i128>>, Abort> {
        let var = choose_var(&sys);
        let (lowers, uppers, rest): (Vec<&Row>, Vec<&Row>, Vec<&Row>) = {
            let mut l = Vec::new();
            let mut u = Vec::new();
            let mut r = Vec::new();
            for row in &sys.geqs {
                match row.coeffs[var].signum() {
                    1 => l.push(row),
                    -1 => u.push(row),
                    _ => r.push(row),
                }
            }
            (l, u, r)
        };

        let exact = lowers.iter().all(|r| r.coeffs[var] == 1)
            || uppers.iter().all(|r| r.coeffs[var] == -1);

        let shadow = |slack: bool| -> Result<System, Abort> {
            let mut geqs: Vec<Row> = rest.iter().map(|r| (*r).clone()).collect();
            for l in &lowers {
                for u in &uppers {
                    let a = l.coeffs[var];
                    let b = -u.coeffs[var];
                    let s = if slack { (a - 1) * (b - 1) } else { 0 };
                    geqs.push(combine(l, u, var, s)?);
                }
            }
            Ok(System {
                nvars: sys.nvars,
                eqs: Vec::new(),
                geqs,
            })
        };

        if exact || lowers.is_empty() || uppers.is_empty() {
            let Some(mut model) = self.solve(shadow(false)?)? else {
                return Ok(None);
            };
            model[var] = pick_value(&lowers, &uppers, var, &model);
            return Ok(Some(model));
        }

        if self.solve(shadow(false)?)?.is_none() {
            return Ok(None);
        }
        if let Some(mut model) = self.solve(shadow(true)?)? {
            model[var] = pick_value(&lowers, &uppers, var, &model);
            return Ok(Some(model));
        }
        let max_upper = uppers.iter().map(|u| -u.coeffs[var]).max().unwrap_or(1);
        for l in &lowers {
            let a = l.coeffs[var];
            let top = floor_div(max_upper * a - a - max_upper, max_upper);
            for i in 0..=top {
                let mut eq = (*l).clone();
                eq.c -= i;
                let mut next = sys.clone();
                next.eqs.push(eq);
                if let Some(model) = self.solve(next)? {
                    return Ok(Some(model));
                }
            }
        }
        Ok(None)
    }
}

/// An integer in the bounds on `var` implied by `model`, closest to zero.
fn pick_value(lowers: &[&Row], uppers: &[&Row], var: usize, model: &[i128]) -> i128 {
    let rest = |r: &Row| r.eval(model) - r.coeffs[var] * model[var];
    let lo = lowers
        .iter()
        .map(|r| ceil_div(-rest(r), r.coeffs[var]))
        .max();
    let hi = uppers
        .iter()
        .map(|r| floor_div(rest(r), -r.coeffs[var]))
        .min();
    match (lo, hi) {
        (Some(lo), Some(hi)) => {
            assert!(lo <= hi, "shadow model leaves no integer for eliminated variable");
            0.clamp(lo, hi)
        }
        (Some(lo), None) => lo.max(0),
        (None, Some(hi)) => hi.min(0),
        (None, None) => 0,
    }
}

fn choose_var(sys: &System) -> usize {
    let mut best: Option<(usize, (u8, usize))> = None;
    for v in 0..sys.nvars {
        let (mut nl, mut nu, mut unit_l, mut unit_u) = (0usize, 0usize, true, true);
        for r in &sys.geqs {
            match r.coeffs[v] {
                0 => {}
                a if a > 0 => {
                    nl += 1;
                    unit_l &= a == 1;
                }
                a => {
                    nu += 1;
                    unit_u &= a == -1;
                }
            }
        }
        if nl + nu == 0 {
            continue;
        }
        let class = if nl == 0 || nu == 0 {
            0
        } else if unit_l || unit_u {
            1
        } else {
            2
        };
        let key = (class, nl * nu);
        if best.map_or(true, |(_, k)| key < k) {
            best = Some((v, key));
        }
    }
    best.expect("system with inequalities mentions a variable").0
}

/// Divides through by coefficient gcds, tightens constants, drops trivial
/// rows, merges parallel inequalities and promotes tight opposing pairs to
/// equalities. Returns `false` on a detected contradiction.
fn normalize(sys: &mut System) -> bool {
    let mut eqs = Vec::with_capacity(sys.eqs.len());
    for mut r in std::mem::take(&mut sys.eqs) {
        let g = r.coeffs.iter().fold(0, |g, &a| gcd(g, a));
        if g == 0 {
            if r.c != 0 {
                return false;
            }
            continue;
        }
        if r.c % g != 0 {
            return false;
        }
        r.coeffs.iter_mut().for_each(|a| *a /= g);
        r.c /= g;
        if !eqs.contains(&r) {
            eqs.push(r);
        }
    }

    let mut tightest: BTreeMap<Vec<i128>, i128> = BTreeMap::new();
    for mut r in std::mem::take(&mut sys.geqs) {
        let g = r.coeffs.iter().fold(0, |g, &a| gcd(g, a));
        if g == 0 {
            if r.c < 0 {
                return false;
            }
            continue;
        }
        r.coeffs.iter_mut().for_each(|a| *a /= g);
        r.c = floor_div(r.c, g);
        tightest
            .entry(r.coeffs)
            .and_modify(|c| *c = (*c).min(r.c))
            .or_insert(r.c);
    }

    let mut geqs = Vec::with_capacity(tightest.len());
    for (coeffs, &c) in &tightest {
        let neg: Vec<i128> = coeffs.iter().map(|a| -a).collect();
        if let Some(&c2) = tightest.get(&neg) {
            if c + c2 < 0 {
                return false;
            }
            if c + c2 == 0 {
                // a·x + c >= 0 and -a·x - c >= 0: keep one copy as an equality
                if coeffs < &neg {
                    eqs.push(Row {
                        coeffs: coeffs.clone(),
                        c,
                    });
                }
                continue;
            }
        }
        geqs.push(Row {
            coeffs: coeffs.clone(),
            c,
        });
    }
    sys.eqs = eqs;
    sys.geqs = geqs;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn row(coeffs: &[i128], c: i128) -> Row {
        Row {
            coeffs: coeffs.to_vec(),
            c,
        }
    }

    fn run(sys: System) -> Option<Vec<i128>> {
        let deadline = Instant::now() + Duration::from_secs(5);
        let check = sys.clone();
        let out = Omega::new(1_000_000, deadline).solve(sys).unwrap();
        if let Some(m) = &out {
            for r in &check.eqs {
                assert_eq!(r.eval(m), 0);
            }
            for r in &check.geqs {
                assert!(r.eval(m) >= 0, "{:?} violates {:?}", m, r);
            }
        }
        out
    }

    #[test]
    fn mod_hat_range() {
        assert_eq!(mod_hat(3, 4), -1);
        assert_eq!(mod_hat(-3, 4), 1);
        assert_eq!(mod_hat(12, 7), -2);
        assert_eq!(mod_hat(5, 2), -1);
    }

    #[test]
    fn parity_equality_is_unsat() {
        // 2x - 2y = 1
        let sys = System {
            nvars: 2,
            eqs: vec![row(&[2, -2], -1)],
            geqs: vec![],
        };
        assert!(run(sys).is_none());
    }

    #[test]
    fn equality_without_unit_coefficient() {
        // 3x + 5y = 7,  0 <= x <= 10
        let sys = System {
            nvars: 2,
            eqs: vec![row(&[3, 5], -7)],
            geqs: vec![row(&[1, 0], 0), row(&[-1, 0], 10)],
        };
        let m = run(sys).unwrap();
        assert_eq!(3 * m[0] + 5 * m[1], 7);
    }

    #[test]
    fn real_but_not_integer_feasible() {
        // 2 <= 3x <= 2*... : 3x >= 1 and 3x <= 2 has rational but no integer solution
        let sys = System {
            nvars: 1,
            eqs: vec![],
            geqs: vec![row(&[3], -1), row(&[-3], 2)],
        };
        assert!(run(sys).is_none());
    }

    #[test]
    fn dark_shadow_gap_needs_splinters() {
        // 27 <= 11x + 13y <= 45, -10 <= 7x - 9y <= 4  (Pugh's example: no integer point)
        let sys = System {
            nvars: 2,
            eqs: vec![],
            geqs: vec![
                row(&[11, 13], -27),
                row(&[-11, -13], 45),
                row(&[7, -9], 10),
                row(&[-7, 9], 4),
            ],
        };
        assert!(run(sys).is_none());
    }

    #[test]
    fn unique_model() {
        // x > 3 && x < 5
        let sys = System {
            nvars: 1,
            eqs: vec![],
            geqs: vec![row(&[1], -4), row(&[-1], 4)],
        };
        assert_eq!(run(sys), Some(vec![4]));
    }
}
