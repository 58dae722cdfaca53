//! Mixed-integer quadratic formulation of the scheduling problem.
//!
//! [`MiqpModel::build`] produces a linearized model (big-M rows plus bilinear
//! node-time rows) that external solvers can read from its text rendering.
//! [`check_assignment`] evaluates the original max/min/indicator constraints
//! directly and never looks at the linearization, so the two can be checked
//! against each other.
//!
//! Constraint ids:
//!
//! | id             | meaning                                                     |
//! |----------------|-------------------------------------------------------------|
//! | `obj`          | objective `sum_N tN[N]`                                     |
//! | `onepos[p]`    | at most one heuristic per position `p >= 1`                 |
//! | `assign[h]`    | each heuristic takes exactly one position (0 = unused)      |
//! | `posdef[h]`    | `p[h] = sum_p p * x[h][p]`                                  |
//! | `budget[h]`    | `T_h * (1 - x[h][0]) >= t[h]`                               |
//! | `succ[N][h]`   | `s[N][h] = max(0, min(1, t[h] - tau + 1))`                  |
//! | `solved[N]`    | `sN[N] = min(1, sum_h s[N][h])`                             |
//! | `cov`          | `sum_N sN[N] >= alpha * |N|`                                |
//! | `first[N]`     | `pmin[N] = min_h (p[h] s[N][h] + (1 - s[N][h]) |H|)`        |
//! | `before[N][h]` | `z[N][h] = 1{p[h] < pmin[N]}`                               |
//! | `at[N][h]`     | `f[N][h] = 1{p[h] = pmin[N]}`                               |
//! | `time[N]`      | node time, quadratic                                        |

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Write;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::schedule::{check_alpha, Schedule};

const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
}

/// Which symbol of the formulation a variable instantiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarFamily {
    /// `x_p^h`
    Position,
    /// `t^h`
    Budget,
    /// `p^h`
    PositionIndex,
    /// `s_N^h`
    HeuristicSolves,
    /// `s_N`
    NodeSolved,
    /// `p_N^min`
    FirstPosition,
    /// `z_N^h`
    RunsBefore,
    /// `f_N^h`
    SolvesFirst,
    /// `t_N`
    NodeTime,
    /// auxiliary linearization variable
    Auxiliary,
}

impl VarFamily {
    pub fn symbol(self) -> &'static str {
        match self {
            VarFamily::Position => "x_p^h",
            VarFamily::Budget => "t^h",
            VarFamily::PositionIndex => "p^h",
            VarFamily::HeuristicSolves => "s_N^h",
            VarFamily::NodeSolved => "s_N",
            VarFamily::FirstPosition => "p_N^min",
            VarFamily::RunsBefore => "z_N^h",
            VarFamily::SolvesFirst => "f_N^h",
            VarFamily::NodeTime => "t_N",
            VarFamily::Auxiliary => "aux",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: i64,
    pub upper: i64,
    pub family: VarFamily,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn as_str(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    fn holds(self, lhs: f64, rhs: f64) -> bool {
        let tol = ROW_TOLERANCE * (1.0 + rhs.abs());
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Ge => lhs >= rhs - tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

/// One row: `sum linear + sum bilinear (rel) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub id: String,
    pub linear: Vec<(usize, f64)>,
    pub bilinear: Vec<(usize, usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Row {
    fn linear(id: String, linear: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Self {
            id,
            linear,
            bilinear: Vec::new(),
            relation,
            rhs,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        !self.bilinear.is_empty()
    }
}

/// Variables, objective and rows of a (linearized) model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Formulation {
    pub variables: Vec<Variable>,
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<Row>,
    index: HashMap<String, usize>,
}

impl Formulation {
    fn add_var(&mut self, name: String, kind: VarKind, lower: i64, upper: i64, family: VarFamily) -> usize {
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
            family,
        });
        id
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn v(&self, name: &str) -> usize {
        self.index[name]
    }

    pub fn count_family(&self, family: VarFamily) -> usize {
        self.variables.iter().filter(|v| v.family == family).count()
    }

    /// Ids of rows, bounds, or integrality conditions the assignment violates.
    /// Every variable must be assigned.
    pub fn violations(&self, a: &Assignment) -> Result<Vec<String>> {
        let values = self
            .variables
            .iter()
            .map(|v| a.get(&v.name).ok_or_else(|| Error::MissingVariable(v.name.clone())))
            .collect::<Result<Vec<i64>>>()?;
        let mut violated = Vec::new();
        for (v, &x) in self.variables.iter().zip(&values) {
            if x < v.lower || x > v.upper {
                violated.push(format!("bounds[{}]", v.name));
            }
        }
        for row in &self.rows {
            let lhs: f64 = row.linear.iter().map(|&(i, c)| c * values[i] as f64).sum::<f64>()
                + row
                    .bilinear
                    .iter()
                    .map(|&(i, j, c)| c * values[i] as f64 * values[j] as f64)
                    .sum::<f64>();
            if !row.relation.holds(lhs, row.rhs) {
                violated.push(row.id.clone());
            }
        }
        Ok(violated)
    }

    pub fn objective_value(&self, a: &Assignment) -> Result<f64> {
        self.objective
            .iter()
            .map(|&(i, c)| {
                let name = &self.variables[i].name;
                a.get(name)
                    .map(|x| c * x as f64)
                    .ok_or_else(|| Error::MissingVariable(name.clone()))
            })
            .sum()
    }
}

/// Integer values by variable name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<String, i64>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: i64) {
        self.values.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.values.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub fn x_name(h: &str, p: usize) -> String {
    format!("x[{h}][{p}]")
}
pub fn t_name(h: &str) -> String {
    format!("t[{h}]")
}
pub fn p_name(h: &str) -> String {
    format!("p[{h}]")
}
pub fn s_name(n: &str, h: &str) -> String {
    format!("s[{n}][{h}]")
}
pub fn sn_name(n: &str) -> String {
    format!("sN[{n}]")
}
pub fn pmin_name(n: &str) -> String {
    format!("pmin[{n}]")
}
pub fn z_name(n: &str, h: &str) -> String {
    format!("z[{n}][{h}]")
}
pub fn f_name(n: &str, h: &str) -> String {
    format!("f[{n}][{h}]")
}
pub fn tn_name(n: &str) -> String {
    format!("tN[{n}]")
}
fn aux_name(prefix: &str, n: &str, h: &str) -> String {
    format!("{prefix}[{n}][{h}]")
}

/// Scheduling MIQP for one dataset and coverage level.
#[derive(Clone, Debug, PartialEq)]
pub struct MiqpModel {
    pub heuristics: Vec<String>,
    pub nodes: Vec<String>,
    /// `taus[h][n]`, `None` for FAIL.
    pub taus: Vec<Vec<Option<u64>>>,
    /// `T^h`: largest finite tau of each heuristic, 0 if none.
    pub max_iterations: Vec<u64>,
    pub alpha: f64,
    pub formulation: Formulation,
}

fn check_name(kind: &str, name: &str) -> Result<()> {
    if name.chars().any(|c| c.is_whitespace() || matches!(c, '*' | ':' | '[' | ']')) {
        return Err(Error::Model(format!(
            "{kind} name `{name}` contains whitespace or one of `*:[]`"
        )));
    }
    Ok(())
}

impl MiqpModel {
    pub fn build(d: &Dataset, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if d.num_heuristics() == 0 {
            return Err(Error::Model("no heuristics, so no schedule positions exist".into()));
        }
        if d.num_nodes() == 0 {
            return Err(Error::Model("no nodes".into()));
        }
        let heuristics: Vec<String> = d.heuristics().iter().map(|h| h.to_string()).collect();
        let nodes: Vec<String> = d.nodes().iter().map(|n| n.to_string()).collect();
        for h in &heuristics {
            check_name("heuristic", h)?;
        }
        for n in &nodes {
            check_name("node", n)?;
        }
        let taus: Vec<Vec<Option<u64>>> = (0..heuristics.len())
            .map(|h| (0..nodes.len()).map(|n| d.tau(h, n)).collect())
            .collect();
        let max_iterations: Vec<u64> = (0..heuristics.len()).map(|h| d.max_tau(h)).collect();
        let formulation = linearize(&heuristics, &nodes, &taus, &max_iterations, alpha);
        Ok(Self {
            heuristics,
            nodes,
            taus,
            max_iterations,
            alpha,
            formulation,
        })
    }

    fn num_positions(&self) -> usize {
        self.heuristics.len()
    }

    /// Upper bound of every `tN`: one plus the longest possible schedule.
    pub fn node_time_upper(&self) -> u64 {
        1 + self.max_iterations.iter().sum::<u64>()
    }

    /// Line-oriented text rendering; see the `COMMENTS` section of the output.
    pub fn render(&self) -> String {
        let f = &self.formulation;
        let big_h = self.num_positions();
        let mut out = String::new();
        out.push_str("# Heuristic scheduling MIQP (raw iteration units; matches the normalized\n");
        out.push_str("# schedule objective only when every average iteration cost is 1).\n");
        out.push_str(&format!(
            "# heuristics {}  nodes {}  alpha {}\n",
            self.heuristics.len(),
            self.nodes.len(),
            self.alpha
        ));
        out.push_str("# Linearizations (original forms are listed under COMMENTS):\n");
        out.push_str("#  succ    tau finite: t[h] - tau s >= 0 ; t[h] - (T_h+1) s <= tau - 1\n");
        out.push_str("#          tau = inf : s[N][h] = 0\n");
        out.push_str("#  solved  sN - s[N][h] >= 0 for all h ; sN - sum_h s[N][h] <= 0\n");
        out.push_str(&format!(
            "#  first   w[N][h] = p[h] s[N][h] (McCormick, M = |H| = {big_h}); pmin <= w + |H|(1 - s);\n"
        ));
        out.push_str("#          pmin >= w + |H|(1 - s) - |H|(1 - m[N][h]); sum_h m[N][h] = 1\n");
        out.push_str(&format!(
            "#  before  p - pmin <= -1 + M(1 - z) ; p - pmin >= -M z   (M = |H| = {big_h})\n"
        ));
        out.push_str(&format!(
            "#  at      g[N][h] = 1{{p > pmin}}: p - pmin <= M' g ; p - pmin >= 1 - M'(1 - g)  (M' = |H|+1 = {})\n",
            big_h + 1
        ));
        out.push_str("#          f + z + g = 1\n");
        out.push_str("#  time    u[N][h] = z t[h] (McCormick, M = T_h); sum_{h,p} x t replaced by sum_h t[h]\n");
        out.push_str("#          (equal under assign and budget); bilinear terms are products with sN[N]\n");

        out.push_str("VARIABLES\n");
        for v in &f.variables {
            let kind = match v.kind {
                VarKind::Binary => "binary",
                VarKind::Integer => "integer",
            };
            writeln!(out, "{kind} {} {} {}", v.name, v.lower, v.upper).unwrap();
        }
        out.push_str("OBJECTIVE\nminimize");
        for &(i, c) in &f.objective {
            out.push_str(&term(c, &f.variables[i].name));
        }
        out.push('\n');
        out.push_str("LINEAR\n");
        for row in f.rows.iter().filter(|r| !r.is_quadratic()) {
            render_row(&mut out, f, row);
        }
        out.push_str("QUADRATIC\n");
        for row in f.rows.iter().filter(|r| r.is_quadratic()) {
            render_row(&mut out, f, row);
        }
        out.push_str("COMMENTS\n");
        out.push_str("format: `kind name lower upper` per variable; rows are `id: terms rel rhs`;\n");
        out.push_str("a term is `sign coef var` or `sign coef var*var`.\n");
        for (family, pattern, meaning) in [
            (VarFamily::Position, "x[h][p]", "1 if heuristic h runs at position p (p = 0: not scheduled)"),
            (VarFamily::Budget, "t[h]", "iteration budget of h, 0 if not scheduled"),
            (VarFamily::PositionIndex, "p[h]", "position of h"),
            (VarFamily::HeuristicSolves, "s[N][h]", "1 if h solves node N within its budget"),
            (VarFamily::NodeSolved, "sN[N]", "1 if the schedule solves N"),
            (VarFamily::FirstPosition, "pmin[N]", "position of the first heuristic solving N, |H| if none"),
            (VarFamily::RunsBefore, "z[N][h]", "1 if h runs before position pmin[N]"),
            (VarFamily::SolvesFirst, "f[N][h]", "1 if h sits at position pmin[N]"),
            (VarFamily::NodeTime, "tN[N]", "iterations spent at N (1 + schedule length if unsolved)"),
        ] {
            writeln!(out, "{pattern} = {}: {meaning}", family.symbol()).unwrap();
        }
        out.push_str("w[N][h], m[N][h], g[N][h], u[N][h]: auxiliary linearization variables\n");
        out.push_str("cov: coverage constraint sum_N sN[N] >= alpha |N|\n");
        out.push_str("END\n");
        out
    }
}

fn term(c: f64, name: &str) -> String {
    if c < 0.0 {
        format!(" - {} {name}", -c)
    } else {
        format!(" + {c} {name}")
    }
}

fn render_row(out: &mut String, f: &Formulation, row: &Row) {
    out.push_str(&row.id);
    out.push(':');
    for &(i, c) in &row.linear {
        out.push_str(&term(c, &f.variables[i].name));
    }
    for &(i, j, c) in &row.bilinear {
        out.push_str(&term(c, &format!("{}*{}", f.variables[i].name, f.variables[j].name)));
    }
    writeln!(out, " {} {}", row.relation.as_str(), row.rhs).unwrap();
}

fn linearize(
    heuristics: &[String],
    nodes: &[String],
    taus: &[Vec<Option<u64>>],
    max_iterations: &[u64],
    alpha: f64,
) -> Formulation {
    use Relation::{Eq, Ge, Le};
    use VarFamily::*;
    use VarKind::{Binary, Integer};

    let big_h = heuristics.len() as i64;
    let hf = big_h as f64;
    let mut f = Formulation::default();

    for (hi, h) in heuristics.iter().enumerate() {
        for p in 0..=heuristics.len() {
            f.add_var(x_name(h, p), Binary, 0, 1, Position);
        }
        f.add_var(t_name(h), Integer, 0, max_iterations[hi] as i64, Budget);
        f.add_var(p_name(h), Integer, 0, big_h, PositionIndex);
    }
    let tn_upper = 1 + max_iterations.iter().sum::<u64>() as i64;
    for n in nodes {
        for h in heuristics {
            f.add_var(s_name(n, h), Binary, 0, 1, HeuristicSolves);
        }
        f.add_var(sn_name(n), Binary, 0, 1, NodeSolved);
        f.add_var(pmin_name(n), Integer, 1, big_h, FirstPosition);
        for h in heuristics {
            f.add_var(z_name(n, h), Binary, 0, 1, RunsBefore);
            f.add_var(f_name(n, h), Binary, 0, 1, SolvesFirst);
        }
        f.add_var(tn_name(n), Integer, 1, tn_upper, NodeTime);
        for (hi, h) in heuristics.iter().enumerate() {
            f.add_var(aux_name("w", n, h), Integer, 0, big_h, Auxiliary);
            f.add_var(aux_name("m", n, h), Binary, 0, 1, Auxiliary);
            f.add_var(aux_name("g", n, h), Binary, 0, 1, Auxiliary);
            f.add_var(aux_name("u", n, h), Integer, 0, max_iterations[hi] as i64, Auxiliary);
        }
    }

    f.objective = nodes.iter().map(|n| (f.v(&tn_name(n)), 1.0)).collect();

    let mut rows = Vec::new();
    for p in 1..=heuristics.len() {
        let terms = heuristics.iter().map(|h| (f.v(&x_name(h, p)), 1.0)).collect();
        rows.push(Row::linear(format!("onepos[{p}]"), terms, Le, 1.0));
    }
    for (hi, h) in heuristics.iter().enumerate() {
        let terms = (0..=heuristics.len()).map(|p| (f.v(&x_name(h, p)), 1.0)).collect();
        rows.push(Row::linear(format!("assign[{h}]"), terms, Eq, 1.0));
        let mut terms = vec![(f.v(&p_name(h)), 1.0)];
        terms.extend((1..=heuristics.len()).map(|p| (f.v(&x_name(h, p)), -(p as f64))));
        rows.push(Row::linear(format!("posdef[{h}]"), terms, Eq, 0.0));
        let cap = max_iterations[hi] as f64;
        rows.push(Row::linear(
            format!("budget[{h}]"),
            vec![(f.v(&t_name(h)), 1.0), (f.v(&x_name(h, 0)), cap)],
            Le,
            cap,
        ));
    }

    for (ni, n) in nodes.iter().enumerate() {
        let sn = f.v(&sn_name(n));
        let pmin = f.v(&pmin_name(n));
        let tn = f.v(&tn_name(n));
        for (hi, h) in heuristics.iter().enumerate() {
            let s = f.v(&s_name(n, h));
            let t = f.v(&t_name(h));
            match taus[hi][ni] {
                None => rows.push(Row::linear(format!("succ[{n}][{h}]"), vec![(s, 1.0)], Eq, 0.0)),
                Some(tau) => {
                    let tau = tau as f64;
                    let cap = max_iterations[hi] as f64;
                    rows.push(Row::linear(format!("succa[{n}][{h}]"), vec![(t, 1.0), (s, -tau)], Ge, 0.0));
                    rows.push(Row::linear(
                        format!("succb[{n}][{h}]"),
                        vec![(t, 1.0), (s, -(cap + 1.0))],
                        Le,
                        tau - 1.0,
                    ));
                }
            }
            rows.push(Row::linear(format!("solveda[{n}][{h}]"), vec![(sn, 1.0), (s, -1.0)], Ge, 0.0));
        }
        let mut terms = vec![(sn, 1.0)];
        terms.extend(heuristics.iter().map(|h| (f.v(&s_name(n, h)), -1.0)));
        rows.push(Row::linear(format!("solvedb[{n}]"), terms, Le, 0.0));

        // pmin = min_h (w + |H| (1 - s))
        let mut select = Vec::new();
        for h in heuristics {
            let s = f.v(&s_name(n, h));
            let p = f.v(&p_name(h));
            let w = f.v(&aux_name("w", n, h));
            let m = f.v(&aux_name("m", n, h));
            rows.push(Row::linear(format!("firstw1[{n}][{h}]"), vec![(w, 1.0), (s, -hf)], Le, 0.0));
            rows.push(Row::linear(format!("firstw2[{n}][{h}]"), vec![(w, 1.0), (p, -1.0)], Le, 0.0));
            rows.push(Row::linear(
                format!("firstw3[{n}][{h}]"),
                vec![(w, 1.0), (p, -1.0), (s, -hf)],
                Ge,
                -hf,
            ));
            rows.push(Row::linear(
                format!("firstub[{n}][{h}]"),
                vec![(pmin, 1.0), (w, -1.0), (s, hf)],
                Le,
                hf,
            ));
            rows.push(Row::linear(
                format!("firstlb[{n}][{h}]"),
                vec![(pmin, 1.0), (w, -1.0), (s, hf), (m, -hf)],
                Ge,
                0.0,
            ));
            select.push((m, 1.0));
        }
        rows.push(Row::linear(format!("firstm[{n}]"), select, Eq, 1.0));

        for (hi, h) in heuristics.iter().enumerate() {
            let p = f.v(&p_name(h));
            let z = f.v(&z_name(n, h));
            let fv = f.v(&f_name(n, h));
            let g = f.v(&aux_name("g", n, h));
            let u = f.v(&aux_name("u", n, h));
            let t = f.v(&t_name(h));
            let cap = max_iterations[hi] as f64;
            rows.push(Row::linear(
                format!("beforea[{n}][{h}]"),
                vec![(p, 1.0), (pmin, -1.0), (z, hf)],
                Le,
                hf - 1.0,
            ));
            rows.push(Row::linear(
                format!("beforeb[{n}][{h}]"),
                vec![(p, 1.0), (pmin, -1.0), (z, hf)],
                Ge,
                0.0,
            ));
            let m2 = hf + 1.0;
            rows.push(Row::linear(
                format!("ata[{n}][{h}]"),
                vec![(p, 1.0), (pmin, -1.0), (g, -m2)],
                Le,
                0.0,
            ));
            rows.push(Row::linear(
                format!("atb[{n}][{h}]"),
                vec![(p, 1.0), (pmin, -1.0), (g, -m2)],
                Ge,
                1.0 - m2,
            ));
            rows.push(Row::linear(
                format!("atc[{n}][{h}]"),
                vec![(fv, 1.0), (z, 1.0), (g, 1.0)],
                Eq,
                1.0,
            ));
            rows.push(Row::linear(format!("timeu1[{n}][{h}]"), vec![(u, 1.0), (z, -cap)], Le, 0.0));
            rows.push(Row::linear(format!("timeu2[{n}][{h}]"), vec![(u, 1.0), (t, -1.0)], Le, 0.0));
            rows.push(Row::linear(
                format!("timeu3[{n}][{h}]"),
                vec![(u, 1.0), (t, -1.0), (z, -cap)],
                Ge,
                -cap,
            ));
        }

        // tN - sN*sum u - sN*sum f tau + sN + sN*sum t - sum t = 1
        let mut linear = vec![(tn, 1.0), (sn, 1.0)];
        let mut bilinear = Vec::new();
        for (hi, h) in heuristics.iter().enumerate() {
            let t = f.v(&t_name(h));
            linear.push((t, -1.0));
            bilinear.push((sn, f.v(&aux_name("u", n, h)), -1.0));
            if let Some(tau) = taus[hi][ni] {
                bilinear.push((sn, f.v(&f_name(n, h)), -(tau as f64)));
            }
            bilinear.push((sn, t, 1.0));
        }
        rows.push(Row {
            id: format!("time[{n}]"),
            linear,
            bilinear,
            relation: Eq,
            rhs: 1.0,
        });
    }

    let coverage = nodes.iter().map(|n| (f.v(&sn_name(n)), 1.0)).collect();
    rows.push(Row::linear("cov".into(), coverage, Ge, alpha * nodes.len() as f64));
    f.rows = rows;
    f
}

/// Builds the model and writes its rendering to `sink`.
pub fn export_miqp<W: Write>(d: &Dataset, alpha: f64, sink: &mut W) -> Result<MiqpModel> {
    let model = MiqpModel::build(d, alpha)?;
    sink.write_all(model.render().as_bytes())
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(model)
}

/// Reads a rendered model back into a [`Formulation`].
pub fn parse_rendered(text: &str) -> Result<Formulation> {
    #[derive(PartialEq)]
    enum Section {
        Header,
        Variables,
        Objective,
        Rows,
        Comments,
    }
    let mut f = Formulation::default();
    let mut section = Section::Header;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let err = |message: String| Error::Parse { row, message };
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line {
            "VARIABLES" => {
                section = Section::Variables;
                continue;
            }
            "OBJECTIVE" => {
                section = Section::Objective;
                continue;
            }
            "LINEAR" | "QUADRATIC" => {
                section = Section::Rows;
                continue;
            }
            "COMMENTS" => {
                section = Section::Comments;
                continue;
            }
            "END" => break,
            _ => {}
        }
        match section {
            Section::Header => return Err(err("content before VARIABLES".into())),
            Section::Comments => {}
            Section::Variables => {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 {
                    return Err(err(format!("malformed variable line `{line}`")));
                }
                let kind = match parts[0] {
                    "binary" => VarKind::Binary,
                    "integer" => VarKind::Integer,
                    other => return Err(err(format!("unknown variable kind `{other}`"))),
                };
                let lower = parts[2].parse().map_err(|_| err("bad lower bound".into()))?;
                let upper = parts[3].parse().map_err(|_| err("bad upper bound".into()))?;
                f.add_var(parts[1].to_string(), kind, lower, upper, VarFamily::Auxiliary);
            }
            Section::Objective => {
                let rest = line
                    .strip_prefix("minimize")
                    .ok_or_else(|| err("objective must start with `minimize`".into()))?;
                let (linear, bilinear) = parse_terms(&f, rest).map_err(err)?;
                if !bilinear.is_empty() {
                    return Err(err("quadratic objective not supported".into()));
                }
                f.objective = linear;
            }
            Section::Rows => {
                let (id, body) = line
                    .split_once(':')
                    .ok_or_else(|| err("row without `id:`".into()))?;
                let tokens: Vec<&str> = body.split_whitespace().collect();
                if tokens.len() < 2 {
                    return Err(err("row without relation".into()));
                }
                let rhs: f64 = tokens[tokens.len() - 1]
                    .parse()
                    .map_err(|_| err("bad right-hand side".into()))?;
                let relation = match tokens[tokens.len() - 2] {
                    "<=" => Relation::Le,
                    ">=" => Relation::Ge,
                    "=" => Relation::Eq,
                    other => return Err(err(format!("unknown relation `{other}`"))),
                };
                let (linear, bilinear) =
                    parse_terms(&f, &tokens[..tokens.len() - 2].join(" ")).map_err(err)?;
                f.rows.push(Row {
                    id: id.trim().to_string(),
                    linear,
                    bilinear,
                    relation,
                    rhs,
                });
            }
        }
    }
    Ok(f)
}

#[allow(clippy::type_complexity)]
fn parse_terms(
    f: &Formulation,
    text: &str,
) -> std::result::Result<(Vec<(usize, f64)>, Vec<(usize, usize, f64)>), String> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() % 3 != 0 {
        return Err(format!("terms must be `sign coef var` triples in `{text}`"));
    }
    let mut linear = Vec::new();
    let mut bilinear = Vec::new();
    for chunk in tokens.chunks(3) {
        let sign = match chunk[0] {
            "+" => 1.0,
            "-" => -1.0,
            other => return Err(format!("expected sign, found `{other}`")),
        };
        let coef: f64 = chunk[1]
            .parse()
            .map_err(|_| format!("bad coefficient `{}`", chunk[1]))?;
        let lookup = |name: &str| f.var(name).ok_or_else(|| format!("undeclared variable `{name}`"));
        match chunk[2].split_once('*') {
            Some((a, b)) => bilinear.push((lookup(a)?, lookup(b)?, sign * coef)),
            None => linear.push((lookup(chunk[2])?, sign * coef)),
        }
    }
    Ok((linear, bilinear))
}

/// Outcome of evaluating the original constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub feasible: bool,
    pub objective: f64,
    pub violated: Vec<String>,
}

/// Evaluates every original constraint directly on the model's own data.
/// Only the non-auxiliary variables are read.
pub fn check_assignment(m: &MiqpModel, a: &Assignment) -> Result<CheckReport> {
    let hs = &m.heuristics;
    let ns = &m.nodes;
    let big_h = hs.len() as i64;
    let get = |name: String| a.get(&name).ok_or(Error::MissingVariable(name));

    let mut x = vec![vec![0i64; hs.len() + 1]; hs.len()];
    let mut t = vec![0i64; hs.len()];
    let mut p = vec![0i64; hs.len()];
    for (hi, h) in hs.iter().enumerate() {
        for (pos, slot) in x[hi].iter_mut().enumerate() {
            *slot = get(x_name(h, pos))?;
        }
        t[hi] = get(t_name(h))?;
        p[hi] = get(p_name(h))?;
    }
    let mut s = vec![vec![0i64; hs.len()]; ns.len()];
    let mut sn = vec![0i64; ns.len()];
    let mut pmin = vec![0i64; ns.len()];
    let mut z = vec![vec![0i64; hs.len()]; ns.len()];
    let mut fv = vec![vec![0i64; hs.len()]; ns.len()];
    let mut tn = vec![0i64; ns.len()];
    for (ni, n) in ns.iter().enumerate() {
        for (hi, h) in hs.iter().enumerate() {
            s[ni][hi] = get(s_name(n, h))?;
            z[ni][hi] = get(z_name(n, h))?;
            fv[ni][hi] = get(f_name(n, h))?;
        }
        sn[ni] = get(sn_name(n))?;
        pmin[ni] = get(pmin_name(n))?;
        tn[ni] = get(tn_name(n))?;
    }

    let mut violated = Vec::new();
    for v in &m.formulation.variables {
        if v.family == VarFamily::Auxiliary {
            continue;
        }
        let value = a.get(&v.name).expect("read above");
        if value < v.lower || value > v.upper {
            violated.push(format!("bounds[{}]", v.name));
        }
    }

    for pos in 1..=hs.len() {
        if (0..hs.len()).map(|hi| x[hi][pos]).sum::<i64>() > 1 {
            violated.push(format!("onepos[{pos}]"));
        }
    }
    for (hi, h) in hs.iter().enumerate() {
        if x[hi].iter().sum::<i64>() != 1 {
            violated.push(format!("assign[{h}]"));
        }
        let position: i64 = x[hi].iter().enumerate().map(|(pos, v)| pos as i64 * v).sum();
        if p[hi] != position {
            violated.push(format!("posdef[{h}]"));
        }
        if (m.max_iterations[hi] as i64) * (1 - x[hi][0]) < t[hi] {
            violated.push(format!("budget[{h}]"));
        }
    }

    for (ni, n) in ns.iter().enumerate() {
        for (hi, h) in hs.iter().enumerate() {
            let expected = match m.taus[hi][ni] {
                None => 0,
                Some(tau) => (t[hi] - tau as i64 + 1).clamp(0, 1),
            };
            if s[ni][hi] != expected {
                violated.push(format!("succ[{n}][{h}]"));
            }
        }
        if sn[ni] != s[ni].iter().sum::<i64>().min(1) {
            violated.push(format!("solved[{n}]"));
        }
        let first = (0..hs.len())
            .map(|hi| p[hi] * s[ni][hi] + (1 - s[ni][hi]) * big_h)
            .min()
            .expect("at least one heuristic");
        if pmin[ni] != first {
            violated.push(format!("first[{n}]"));
        }
        for (hi, h) in hs.iter().enumerate() {
            if z[ni][hi] != (p[hi] < pmin[ni]) as i64 {
                violated.push(format!("before[{n}][{h}]"));
            }
            if fv[ni][hi] != (p[hi] == pmin[ni]) as i64 {
                violated.push(format!("at[{n}][{h}]"));
            }
        }
        let expected = if sn[ni] == 1 {
            let mut total: Option<i64> = Some(0);
            for hi in 0..hs.len() {
                let run = z[ni][hi] * t[hi];
                let finish = match (fv[ni][hi], m.taus[hi][ni]) {
                    (0, _) => Some(0),
                    (_, Some(tau)) => Some(fv[ni][hi] * tau as i64),
                    // the first solver of a solved node cannot have failed there
                    (_, None) => None,
                };
                total = total.zip(finish).map(|(acc, fin)| acc + run + fin);
            }
            total
        } else {
            let length: i64 = (0..hs.len())
                .map(|hi| x[hi].iter().map(|v| v * t[hi]).sum::<i64>())
                .sum();
            Some(1 + length)
        };
        if expected != Some(tn[ni]) {
            violated.push(format!("time[{n}]"));
        }
    }

    let solved: i64 = sn.iter().sum();
    if !crate::schedule::meets_alpha(solved.max(0) as usize, ns.len(), m.alpha) {
        violated.push("cov".into());
    }

    Ok(CheckReport {
        feasible: violated.is_empty(),
        objective: tn.iter().sum::<i64>() as f64,
        violated,
    })
}

/// Values of the original variables describing `schedule`.
pub fn encode_schedule(m: &MiqpModel, schedule: &Schedule) -> Result<Assignment> {
    let hs = &m.heuristics;
    let big_h = hs.len() as i64;
    let mut position = vec![0usize; hs.len()];
    let mut budget = vec![0i64; hs.len()];
    for (k, e) in schedule.entries().iter().enumerate() {
        let hi = hs
            .iter()
            .position(|h| h == e.heuristic.as_str())
            .ok_or_else(|| Error::UnknownHeuristic(e.heuristic.to_string()))?;
        if e.budget > m.max_iterations[hi] {
            return Err(Error::Model(format!(
                "budget {} of `{}` exceeds its largest observed tau {}",
                e.budget, e.heuristic, m.max_iterations[hi]
            )));
        }
        position[hi] = k + 1;
        budget[hi] = e.budget as i64;
    }

    let mut a = Assignment::new();
    for (hi, h) in hs.iter().enumerate() {
        for pos in 0..=hs.len() {
            a.set(x_name(h, pos), (position[hi] == pos) as i64);
        }
        a.set(t_name(h), budget[hi]);
        a.set(p_name(h), position[hi] as i64);
    }
    let length: i64 = budget.iter().sum();
    for (ni, n) in m.nodes.iter().enumerate() {
        let solves: Vec<i64> = (0..hs.len())
            .map(|hi| m.taus[hi][ni].map_or(0, |tau| (budget[hi] >= tau as i64) as i64))
            .collect();
        let solved = solves.iter().any(|&v| v == 1);
        let first = (0..hs.len())
            .map(|hi| position[hi] as i64 * solves[hi] + (1 - solves[hi]) * big_h)
            .min()
            .unwrap_or(big_h);
        let mut time = 0;
        for (hi, h) in hs.iter().enumerate() {
            let p = position[hi] as i64;
            let before = (p < first) as i64;
            let at = (p == first) as i64;
            a.set(s_name(n, h), solves[hi]);
            a.set(z_name(n, h), before);
            a.set(f_name(n, h), at);
            time += before * budget[hi];
            if at == 1 && solved {
                time += m.taus[hi][ni].expect("first solver succeeded") as i64;
            }
        }
        a.set(sn_name(n), solved as i64);
        a.set(pmin_name(n), first);
        a.set(tn_name(n), if solved { time } else { 1 + length });
    }
    Ok(a)
}

/// Adds the auxiliary linearization variables implied by the original ones.
pub fn linearization_witness(m: &MiqpModel, a: &Assignment) -> Result<Assignment> {
    let hs = &m.heuristics;
    let big_h = hs.len() as i64;
    let get = |name: String| a.get(&name).ok_or(Error::MissingVariable(name));
    let mut out = a.clone();
    for n in &m.nodes {
        let pmin = get(pmin_name(n))?;
        let mut chosen = false;
        for h in hs {
            let p = get(p_name(h))?;
            let s = get(s_name(n, h))?;
            let z = get(z_name(n, h))?;
            let t = get(t_name(h))?;
            let w = p * s;
            let q = w + big_h * (1 - s);
            let pick = !chosen && q == pmin;
            chosen |= pick;
            out.set(aux_name("w", n, h), w);
            out.set(aux_name("m", n, h), pick as i64);
            out.set(aux_name("g", n, h), (p > pmin) as i64);
            out.set(aux_name("u", n, h), z * t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::worked_example;

    fn optimum() -> Schedule {
        Schedule::from_pairs(&[("h1", 1), ("h2", 3)]).unwrap()
    }

    #[test]
    fn variable_counts() {
        let m = MiqpModel::build(&worked_example(), 0.5).unwrap();
        let f = &m.formulation;
        assert_eq!(f.count_family(VarFamily::Position), 12);
        assert_eq!(f.count_family(VarFamily::Budget), 3);
        assert_eq!(f.count_family(VarFamily::PositionIndex), 3);
        assert_eq!(f.count_family(VarFamily::HeuristicSolves), 9);
        assert_eq!(f.count_family(VarFamily::RunsBefore), 9);
        assert_eq!(f.count_family(VarFamily::SolvesFirst), 9);
        assert_eq!(f.count_family(VarFamily::NodeSolved), 3);
        assert_eq!(f.count_family(VarFamily::FirstPosition), 3);
        assert_eq!(f.count_family(VarFamily::NodeTime), 3);
        assert_eq!(m.max_iterations, vec![1, 4, 4]);
    }

    #[test]
    fn node_time_bound_single_cell() {
        let d = Dataset::from_tau_table(&["h"], &["N"], &[vec![Some(1)]]).unwrap();
        let m = MiqpModel::build(&d, 1.0).unwrap();
        let tn = &m.formulation.variables[m.formulation.var("tN[N]").unwrap()];
        assert_eq!((tn.lower, tn.upper), (1, 2));
        assert_eq!(m.node_time_upper(), 2);
    }

    #[test]
    fn empty_heuristic_set_rejected() {
        let d = Dataset::new(vec![], vec![crate::NodeId::new("N").unwrap()], vec![]).unwrap();
        assert!(matches!(MiqpModel::build(&d, 0.5), Err(Error::Model(_))));
    }

    #[test]
    fn worked_optimum_is_feasible() {
        let m = MiqpModel::build(&worked_example(), 0.5).unwrap();
        let a = encode_schedule(&m, &optimum()).unwrap();
        assert_eq!(a.get("x[h1][1]"), Some(1));
        assert_eq!(a.get("x[h2][2]"), Some(1));
        assert_eq!(a.get("x[h3][0]"), Some(1));
        let r = check_assignment(&m, &a).unwrap();
        assert!(r.feasible, "{:?}", r.violated);
        assert_eq!(r.objective, 9.0);
    }

    #[test]
    fn flipped_node_flag_violates_solved() {
        let m = MiqpModel::build(&worked_example(), 0.5).unwrap();
        let mut a = encode_schedule(&m, &optimum()).unwrap();
        a.set("sN[N1]", 0);
        let r = check_assignment(&m, &a).unwrap();
        assert!(!r.feasible);
        assert!(r.violated.contains(&"solved[N1]".to_string()), "{:?}", r.violated);
    }

    #[test]
    fn all_zero_violates_assign() {
        let m = MiqpModel::build(&worked_example(), 0.5).unwrap();
        let mut a = Assignment::new();
        for v in &m.formulation.variables {
            a.set(v.name.clone(), 0);
        }
        let r = check_assignment(&m, &a).unwrap();
        assert!(r.violated.contains(&"assign[h1]".to_string()));
        assert!(r.violated.contains(&"cov".to_string()));
    }

    #[test]
    fn missing_variable_rejected() {
        let m = MiqpModel::build(&worked_example(), 0.5).unwrap();
        let mut a = encode_schedule(&m, &optimum()).unwrap();
        a.values.remove("t[h2]");
        assert_eq!(
            check_assignment(&m, &a).unwrap_err(),
            Error::MissingVariable("t[h2]".into())
        );
    }

    #[test]
    fn linearization_accepts_witness() {
        let m = MiqpModel::build(&worked_example(), 0.5).unwrap();
        let a = linearization_witness(&m, &encode_schedule(&m, &optimum()).unwrap()).unwrap();
        assert!(m.formulation.violations(&a).unwrap().is_empty());
        assert_eq!(m.formulation.objective_value(&a).unwrap(), 9.0);
    }

    #[test]
    fn rendering_round_trips() {
        let m = MiqpModel::build(&worked_example(), 0.5).unwrap();
        let mut buf = Vec::new();
        export_miqp(&worked_example(), 0.5, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, m.render());
        for section in ["VARIABLES", "OBJECTIVE", "LINEAR", "QUADRATIC", "COMMENTS"] {
            assert!(text.lines().any(|l| l == section), "missing {section}");
        }
        let parsed = parse_rendered(&text).unwrap();
        assert_eq!(parsed.variables.len(), m.formulation.variables.len());
        let by_id = |rows: &[Row]| {
            let mut v = rows.to_vec();
            v.sort_by(|a, b| a.id.cmp(&b.id));
            v
        };
        assert_eq!(by_id(&parsed.rows), by_id(&m.formulation.rows));
        assert_eq!(parsed.objective, m.formulation.objective);
        let a = linearization_witness(&m, &encode_schedule(&m, &optimum()).unwrap()).unwrap();
        assert!(parsed.violations(&a).unwrap().is_empty());
    }

    #[test]
    fn linearization_rejects_wrong_node_time() {
        let m = MiqpModel::build(&worked_example(), 0.5).unwrap();
        let mut a = linearization_witness(&m, &encode_schedule(&m, &optimum()).unwrap()).unwrap();
        a.set("tN[N2]", 3);
        let v = m.formulation.violations(&a).unwrap();
        assert_eq!(v, vec!["time[N2]".to_string()]);
    }

    #[test]
    fn rejects_names_that_break_rendering() {
        let d = Dataset::from_tau_table(&["a b"], &["N"], &[vec![Some(1)]]).unwrap();
        assert!(matches!(MiqpModel::build(&d, 0.0), Err(Error::Model(_))));
    }
}
