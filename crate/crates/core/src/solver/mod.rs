//! Decision procedure for quantifier-free linear integer arithmetic.
//!
//! Boolean structure is handled by a case-splitting search that prunes with
//! an exact integer feasibility check ([`omega`]) at every branch. Formulas
//! containing opaque nonlinear terms are solved with those terms as free
//! symbols; a model is only reported when it also agrees with the opaque
//! definitions, otherwise the answer is `Unknown`.

mod constraint;
mod omega;
pub mod sexpr;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

pub use constraint::{Atom, CmpOp, Constraint, LinExpr, Opaque, Rel, Symbol};
use omega::{Abort, Omega, Row, System};

pub type Model = BTreeMap<String, i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(Model),
    Unknown(String),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub timeout: Duration,
    /// Work units (constraint rows processed) per feasibility check before
    /// falling back to bounded enumeration.
    pub max_work: usize,
    /// Half-width of the enumeration fallback range.
    pub enum_range: i64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            timeout: Duration::from_millis(2000),
            max_work: 200_000,
            enum_range: 1 << 16,
        }
    }
}

/// Stateless; every query is independent.
#[derive(Debug, Clone, Default)]
pub struct Solver {
    config: SolverConfig,
}

/// Capture-free replacement of `var` by `with`.
pub fn substitute(c: &Constraint, var: &str, with: &LinExpr) -> Constraint {
    c.substitute(var, with)
}

impl Solver {
    pub fn new(config: SolverConfig) -> Self {
        Solver { config }
    }

    pub fn with_timeout(timeout: Duration) -> Self {
        Solver::new(SolverConfig {
            timeout,
            ..SolverConfig::default()
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn check_sat(&self, formula: &Constraint) -> SatResult {
        let names = formula.free_names();
        let mut search = Search {
            solver: self,
            formula,
            names: &names,
            deadline: Instant::now() + self.config.timeout,
            unknown: None,
        };
        match search.run(Vec::new(), vec![formula.clone()]) {
            Some(model) => SatResult::Sat(model),
            None => match search.unknown {
                Some(reason) => SatResult::Unknown(reason),
                None => SatResult::Unsat,
            },
        }
    }

    pub fn check_valid(&self, formula: &Constraint) -> Validity {
        match self.check_sat(&formula.negate()) {
            SatResult::Unsat => Validity::Valid,
            SatResult::Sat(model) => {
                if !formula.has_opaque() {
                    assert_eq!(
                        formula.eval_model(&model),
                        Some(false),
                        "counter-model does not falsify {}",
                        formula
                    );
                }
                Validity::Invalid(model)
            }
            SatResult::Unknown(r) => Validity::Unknown(r),
        }
    }

    /// `Some(true)` when satisfiable, `Some(false)` when not, `None` when
    /// undecided.
    pub fn is_feasible(&self, formula: &Constraint) -> Option<bool> {
        match formula {
            Constraint::True => Some(true),
            Constraint::False => Some(false),
            _ => match self.check_sat(formula) {
                SatResult::Sat(_) => Some(true),
                SatResult::Unsat => Some(false),
                SatResult::Unknown(_) => None,
            },
        }
    }
}

struct Search<'a> {
    solver: &'a Solver,
    formula: &'a Constraint,
    names: &'a std::collections::BTreeSet<String>,
    deadline: Instant,
    unknown: Option<String>,
}

impl Search<'_> {
    fn run(&mut self, mut atoms: Vec<Atom>, mut pending: Vec<Constraint>) -> Option<Model> {
        let mut ors: Vec<Vec<Constraint>> = Vec::new();
        while let Some(c) = pending.pop() {
            match c {
                Constraint::True => {}
                Constraint::False => return None,
                Constraint::Atom(a) if a.rel == Rel::Ne => ors.push(vec![
                    Constraint::atom(a.expr.offset(1), Rel::Le),
                    Constraint::atom(a.expr.neg().offset(1), Rel::Le),
                ]),
                Constraint::Atom(a) => {
                    if !atoms.contains(&a) {
                        atoms.push(a)
                    }
                }
                Constraint::And(ps) => pending.extend(ps.into_iter().rev()),
                Constraint::Or(ps) => ors.push(ps),
            }
        }

        let model = match self.conjunction(&atoms) {
            Ok(Some(m)) => m,
            Ok(None) => return None,
            Err(reason) => {
                self.unknown.get_or_insert(reason);
                return None;
            }
        };

        if ors.is_empty() {
            return self.accept(model);
        }
        // Branch on the smallest disjunction first.
        let idx = (0..ors.len()).min_by_key(|&i| ors[i].len()).unwrap();
        let choices = ors.remove(idx);
        let rest: Vec<Constraint> = ors.into_iter().map(Constraint::Or).collect();
        for choice in choices {
            if Instant::now() > self.deadline {
                self.unknown.get_or_insert_with(|| "timeout".to_string());
                return None;
            }
            let mut next = rest.clone();
            next.push(choice);
            if let Some(m) = self.run(atoms.clone(), next) {
                return Some(m);
            }
        }
        None
    }

    /// Checks a leaf model against the full formula, including opaque
    /// definitions.
    fn accept(&mut self, raw: BTreeMap<Symbol, i128>) -> Option<Model> {
        let mut model = Model::new();
        for name in self.names {
            let v = raw.get(&Symbol::named(name.clone())).copied().unwrap_or(0);
            model.insert(name.clone(), i64::try_from(v).ok()?);
        }
        match self.formula.eval_model(&model) {
            Some(true) => Some(model),
            _ if self.formula.has_opaque() => {
                self.unknown.get_or_insert_with(|| "nonlinear term".to_string());
                None
            }
            other => panic!("solver model {:?} evaluates to {:?} on {}", model, other, self.formula),
        }
    }

    fn conjunction(&self, atoms: &[Atom]) -> Result<Option<BTreeMap<Symbol, i128>>, String> {
        let mut index: BTreeMap<&Symbol, usize> = BTreeMap::new();
        for a in atoms {
            for (s, _) in a.expr.terms() {
                let n = index.len();
                index.entry(s).or_insert(n);
            }
        }
        let nvars = index.len();
        let to_row = |e: &LinExpr, sign: i128| {
            let mut coeffs = vec![0i128; nvars];
            for (s, c) in e.terms() {
                coeffs[index[s]] = sign * c as i128;
            }
            Row {
                coeffs,
                c: sign * e.constant_part() as i128,
            }
        };
        let mut sys = System {
            nvars,
            ..System::default()
        };
        for a in atoms {
            match a.rel {
                Rel::Le => sys.geqs.push(to_row(&a.expr, -1)),
                Rel::Eq => sys.eqs.push(to_row(&a.expr, 1)),
                Rel::Ne => unreachable!("disequalities are split before this point"),
            }
        }
        let symbols: Vec<&Symbol> = {
            let mut v = vec![None; nvars];
            for (s, &i) in &index {
                v[i] = Some(*s);
            }
            v.into_iter().map(Option::unwrap).collect()
        };
        let result = Omega::new(self.solver.config.max_work, self.deadline).solve(sys.clone());
        let model = match result {
            Ok(m) => m,
            Err(Abort::Timeout) => return Err("timeout".to_string()),
            Err(Abort::Budget) => self.enumerate(&sys)?,
        };
        Ok(model.map(|m| {
            symbols
                .iter()
                .zip(m)
                .map(|(s, v)| ((*s).clone(), v))
                .collect()
        }))
    }

    /// Bounded enumeration over per-variable ranges derived from single
    /// variable constraints, clipped to the configured range.
    fn enumerate(&self, sys: &System) -> Result<Option<Vec<i128>>, String> {
        let r = self.solver.config.enum_range as i128;
        let mut lo = vec![-r; sys.nvars];
        let mut hi = vec![r; sys.nvars];
        for row in &sys.geqs {
            let nz: Vec<usize> = (0..sys.nvars).filter(|&i| row.coeffs[i] != 0).collect();
            if let [v] = nz[..] {
                let a = row.coeffs[v];
                if a > 0 {
                    lo[v] = lo[v].max((-row.c).div_euclid(a) + i128::from((-row.c).rem_euclid(a) != 0));
                } else {
                    hi[v] = hi[v].min(row.c.div_euclid(-a));
                }
            }
        }
        let mut space: i128 = 1;
        for v in 0..sys.nvars {
            if lo[v] > hi[v] {
                return Ok(None);
            }
            space = space.saturating_mul(hi[v] - lo[v] + 1);
        }
        if space > 2_000_000 {
            return Err("budget exhausted".to_string());
        }
        let mut point = lo.clone();
        loop {
            let ok = sys.eqs.iter().all(|row| {
                row.coeffs.iter().zip(&point).map(|(a, x)| a * x).sum::<i128>() + row.c == 0
            }) && sys.geqs.iter().all(|row| {
                row.coeffs.iter().zip(&point).map(|(a, x)| a * x).sum::<i128>() + row.c >= 0
            });
            if ok {
                return Ok(Some(point));
            }
            let mut i = 0;
            loop {
                if i == sys.nvars {
                    return Ok(None);
                }
                if point[i] < hi[i] {
                    point[i] += 1;
                    break;
                }
                point[i] = lo[i];
                i += 1;
            }
            if Instant::now() > self.deadline {
                return Err("timeout".to_string());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> LinExpr {
        LinExpr::var(n)
    }
    fn k(c: i64) -> LinExpr {
        LinExpr::constant(c)
    }

    #[test]
    fn x_less_than_x_is_unsat() {
        let s = Solver::default();
        let c = Constraint::cmp(&v("x"), CmpOp::Lt, &v("x"));
        assert_eq!(s.check_sat(&c), SatResult::Unsat);
    }

    #[test]
    fn unique_integer_model() {
        let s = Solver::default();
        let c = Constraint::and([
            Constraint::cmp(&v("x"), CmpOp::Gt, &k(3)),
            Constraint::cmp(&v("x"), CmpOp::Lt, &k(5)),
        ]);
        let SatResult::Sat(m) = s.check_sat(&c) else { panic!() };
        assert_eq!(m["x"], 4);
    }

    #[test]
    fn validity_examples() {
        let s = Solver::default();
        let i = v("i");
        let tautology = Constraint::and([
            Constraint::cmp(&i, CmpOp::Lt, &k(10)),
            Constraint::cmp(&i, CmpOp::Lt, &k(5)),
        ])
        .implies(&Constraint::cmp(&i, CmpOp::Lt, &k(5)));
        assert_eq!(s.check_valid(&tautology), Validity::Valid);

        // the unpatched copy-loop guard does not keep the index below the buffer size
        let weak = Constraint::cmp(&i, CmpOp::Lt, &k(10)).implies(&Constraint::cmp(&i, CmpOp::Lt, &k(5)));
        let Validity::Invalid(m) = s.check_valid(&weak) else { panic!() };
        assert!((5..10).contains(&m["i"]));

        assert_eq!(s.check_valid(&Constraint::cmp(&v("x"), CmpOp::Eq, &v("x"))), Validity::Valid);
    }

    #[test]
    fn disequality_split() {
        let s = Solver::default();
        let c = Constraint::and([
            Constraint::cmp(&v("x"), CmpOp::Ne, &k(0)),
            Constraint::cmp(&v("x"), CmpOp::Ge, &k(0)),
            Constraint::cmp(&v("x"), CmpOp::Le, &k(1)),
        ]);
        let SatResult::Sat(m) = s.check_sat(&c) else { panic!() };
        assert_eq!(m["x"], 1);
    }

    #[test]
    fn nonlinear_is_unknown_or_consistent() {
        let s = Solver::default();
        // x*y == 7 && x == 2 has no integer solution but depends on the product
        let c = Constraint::and([
            Constraint::cmp(&v("x").mul(&v("y")), CmpOp::Eq, &k(7)),
            Constraint::cmp(&v("x"), CmpOp::Eq, &k(2)),
        ]);
        assert!(matches!(s.check_sat(&c), SatResult::Unknown(_)));
        // unsat regardless of the product
        let c = Constraint::and([
            Constraint::cmp(&v("x").mul(&v("y")), CmpOp::Eq, &k(7)),
            Constraint::cmp(&v("x"), CmpOp::Lt, &v("x")),
        ]);
        assert_eq!(s.check_sat(&c), SatResult::Unsat);
    }

    #[test]
    fn model_covers_all_free_symbols() {
        let s = Solver::default();
        let c = Constraint::or([
            Constraint::cmp(&v("a"), CmpOp::Gt, &k(0)),
            Constraint::cmp(&v("b"), CmpOp::Gt, &k(0)),
        ]);
        let SatResult::Sat(m) = s.check_sat(&c) else { panic!() };
        assert!(m.contains_key("a") && m.contains_key("b"));
    }
}
