//! Line-oriented text formats for instances, graphs and tilings, and plain
//! text writers for search traces, optima, stability verdicts and reduction
//! certificates.
//!
//! The instance grammar is documented in `docs/formats.md`. Serialisation is
//! canonical: blocks come in a fixed order, ids ascend and rationals are in
//! lowest terms, so equal instances produce identical text.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exact::{parse_rational, Surd};
use crate::instance::{Instance, InstanceBuilder, Objective};
use crate::local_search::{SearchTrace, Termination};
use crate::metric::{Coord, DistanceTable, Metric, MetricKind, Point, Role, Site};
use crate::oracle::OptimaSet;
use crate::reductions::{GridTilingInstance, PvcGraph, ReductionCertificate};
use crate::stability::StabilityVerdict;

pub const FORMAT_HEADER: &str = "swapstable-instance 1";

/// Significant lines with their 1-based numbers; `#` starts a comment.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

struct Cursor<'a> {
    it: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Cursor<'a> {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(lines(text));
        Cursor { it: it.peekable(), last: 0 }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.it.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(Error::parse(self.last + 1, format!("unexpected end of input, expected {what}"))),
        }
    }

    fn peek_keyword(&mut self) -> Option<&'a str> {
        self.it.peek().and_then(|(_, l)| l.split_whitespace().next())
    }

    /// A line `keyword value`.
    fn keyed(&mut self, keyword: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.next(keyword)?;
        let mut parts = l.splitn(2, char::is_whitespace);
        if parts.next() != Some(keyword) {
            return Err(Error::parse(n, format!("expected `{keyword}`, found `{l}`")));
        }
        Ok((n, parts.next().unwrap_or("").trim()))
    }

    fn keyed_count(&mut self, keyword: &str) -> Result<usize> {
        let (n, v) = self.keyed(keyword)?;
        v.parse().map_err(|_| Error::parse(n, format!("`{keyword}` needs a count, found `{v}`")))
    }
}

fn at_line(n: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Parse { .. } => e,
        other => Error::parse(n, other.to_string()),
    }
}

fn parse_coord(tok: &str) -> Result<Coord> {
    if let Some(inner) = tok.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let q = parse_rational(inner)?;
        if num::Signed::is_negative(&q) {
            return Err(Error::Value(tok.to_string()));
        }
        return Ok(Coord::root(q));
    }
    Ok(Coord::Exact(parse_rational(tok)?))
}

fn parse_usize(n: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::parse(n, format!("malformed {what} `{tok}`")))
}

fn parse_site(n: usize, tok: &str) -> Result<Site> {
    let (role, rest) = match tok.split_at(tok.len().min(1)) {
        ("p", r) => (Role::Data, r),
        ("c", r) => (Role::Centre, r),
        _ => return Err(Error::parse(n, format!("malformed site `{tok}`, expected p<id> or c<id>"))),
    };
    Ok(Site { role, id: parse_usize(n, rest, "site id")? })
}

/// Parses and validates an instance.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut cur = Cursor::new(text);
    let (n, head) = cur.next("header")?;
    if head != FORMAT_HEADER {
        return Err(Error::parse(n, format!("expected `{FORMAT_HEADER}`, found `{head}`")));
    }
    let (n, obj) = cur.keyed("objective")?;
    let objective = match obj {
        "kmeans" => Objective::KMeans,
        "kmedian" => Objective::KMedian,
        _ => return Err(Error::parse(n, format!("unknown objective `{obj}`"))),
    };
    let k = cur.keyed_count("k")?;
    let (n, kind) = cur.keyed("metric")?;
    let kind = match kind {
        "euclidean" => MetricKind::Euclidean,
        "explicit" => MetricKind::Explicit,
        "cylinder_max" => MetricKind::CylinderMax,
        _ => return Err(Error::parse(n, format!("unknown metric `{kind}`"))),
    };
    let dim = cur.keyed_count("dimension")?;
    let (n, pen) = cur.keyed("penalties")?;
    let with_penalties = match pen {
        "yes" => true,
        "no" => false,
        _ => return Err(Error::parse(n, format!("`penalties` must be yes or no, found `{pen}`"))),
    };

    let count = cur.keyed_count("points")?;
    let mut points = Vec::with_capacity(count);
    let mut penalties = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for _ in 0..count {
        let (n, l) = cur.next("a point line")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let extra = if with_penalties { 2 } else { 0 };
        if toks.len() != 2 + dim + extra {
            if !with_penalties && toks.len() == 4 + dim && toks[2 + dim] == "penalty" {
                return Err(Error::parse(n, "penalty given but the header says `penalties no`"));
            }
            return Err(Error::parse(n, format!("point line needs id, multiplicity, {dim} coordinates{}", if with_penalties { " and `penalty <value>`" } else { "" })));
        }
        let id = parse_usize(n, toks[0], "point id")?;
        if !seen.insert(id) {
            return Err(Error::parse(n, format!("duplicate point id {id}")));
        }
        let mult: u64 = toks[1].parse().map_err(|_| Error::parse(n, format!("malformed multiplicity `{}`", toks[1])))?;
        let coords = toks[2..2 + dim].iter().map(|t| parse_coord(t)).collect::<Result<Vec<_>>>().map_err(at_line(n))?;
        if with_penalties {
            if toks[2 + dim] != "penalty" {
                return Err(Error::parse(n, format!("expected `penalty`, found `{}`", toks[2 + dim])));
            }
            let p: Surd = toks[3 + dim].parse().map_err(at_line(n))?;
            if p.is_zero() {
                return Err(Error::parse(n, "penalty must be positive"));
            }
            penalties.insert(id, p);
        }
        points.push(Point::data(id, coords).with_multiplicity(mult));
    }

    let count = cur.keyed_count("centres")?;
    let mut centres = Vec::with_capacity(count);
    let mut seen = BTreeSet::new();
    for _ in 0..count {
        let (n, l) = cur.next("a centre line")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 1 + dim {
            return Err(Error::parse(n, format!("centre line needs id and {dim} coordinates")));
        }
        let id = parse_usize(n, toks[0], "centre id")?;
        if !seen.insert(id) {
            return Err(Error::parse(n, format!("duplicate centre id {id}")));
        }
        let coords = toks[1..].iter().map(|t| parse_coord(t)).collect::<Result<Vec<_>>>().map_err(at_line(n))?;
        centres.push(Point::centre(id, coords));
    }

    let mut centre_order = None;
    if cur.peek_keyword() == Some("centre_order") {
        let (n, v) = cur.keyed("centre_order")?;
        centre_order = Some(v.split_whitespace().map(|t| parse_usize(n, t, "centre id")).collect::<Result<Vec<_>>>()?);
    }

    let metric = match kind {
        MetricKind::Euclidean => Metric::Euclidean,
        MetricKind::CylinderMax => Metric::CylinderMax,
        MetricKind::Explicit => {
            let (n, nm) = cur.keyed("non_metric")?;
            let mut table = DistanceTable::new();
            table.non_metric = match nm {
                "yes" => true,
                "no" => false,
                _ => return Err(Error::parse(n, format!("`non_metric` must be yes or no, found `{nm}`"))),
            };
            let count = cur.keyed_count("matrix")?;
            for _ in 0..count {
                let (n, l) = cur.next("a matrix entry")?;
                let toks: Vec<&str> = l.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(Error::parse(n, "matrix entry needs two sites and a distance"));
                }
                let a = parse_site(n, toks[0])?;
                let b = parse_site(n, toks[1])?;
                let d: Surd = toks[2].parse().map_err(at_line(n))?;
                if table.get(a, b).is_some() {
                    return Err(Error::parse(n, format!("duplicate matrix entry for {a} {b}")));
                }
                table.insert(a, b, d);
            }
            Metric::Explicit(table)
        }
    };

    let mut provenance = Vec::new();
    if cur.peek_keyword() == Some("provenance") {
        let count = cur.keyed_count("provenance")?;
        for _ in 0..count {
            let (n, l) = cur.next("a provenance entry")?;
            let mut parts = l.splitn(2, char::is_whitespace);
            let key = parts.next().unwrap_or("");
            let value = parts.next().map(str::trim).unwrap_or("");
            if key.is_empty() {
                return Err(Error::parse(n, "empty provenance key"));
            }
            provenance.push((key.to_string(), value.to_string()));
        }
    }
    let (n, l) = cur.next("`end`")?;
    if l != "end" {
        return Err(Error::parse(n, format!("expected `end`, found `{l}`")));
    }
    if let Some((n, l)) = cur.it.next() {
        return Err(Error::parse(n, format!("trailing content `{l}` after `end`")));
    }

    let mut b = InstanceBuilder::new(objective, metric, k);
    b.points = points;
    b.centres = centres;
    b.penalties = with_penalties.then_some(penalties);
    b.centre_order = centre_order;
    b.provenance = provenance;
    let last = cur.last;
    b.build().map_err(|e| match e {
        Error::Parse { .. } => e,
        other => Error::parse(last, other.to_string()),
    })
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Canonical text of an instance.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "{FORMAT_HEADER}");
    let _ = writeln!(w, "objective {}", inst.objective());
    let _ = writeln!(w, "k {}", inst.k());
    let _ = writeln!(w, "metric {}", inst.metric().kind());
    let _ = writeln!(w, "dimension {}", inst.dimension());
    let _ = writeln!(w, "penalties {}", if inst.has_penalties() { "yes" } else { "no" });
    let _ = writeln!(w, "points {}", inst.points().len());
    for (j, p) in inst.points().iter().enumerate() {
        let _ = write!(w, "{} {} {}", p.id, p.multiplicity, join(&p.coords));
        if let Some(pen) = inst.penalty_at(j) {
            let _ = write!(w, " penalty {pen}");
        }
        let _ = writeln!(w);
    }
    let _ = writeln!(w, "centres {}", inst.centres().len());
    for c in inst.centres() {
        let _ = writeln!(w, "{} {}", c.id, join(&c.coords));
    }
    let default_order: Vec<usize> = inst.centres().iter().map(|c| c.id).collect();
    if inst.centre_order() != default_order.as_slice() {
        let _ = writeln!(w, "centre_order {}", join(inst.centre_order()));
    }
    if let Metric::Explicit(t) = inst.metric() {
        let _ = writeln!(w, "non_metric {}", if t.non_metric { "yes" } else { "no" });
        let _ = writeln!(w, "matrix {}", t.len());
        for ((a, b), d) in t.iter() {
            let _ = writeln!(w, "{a} {b} {d}");
        }
    }
    if !inst.provenance().is_empty() {
        let _ = writeln!(w, "provenance {}", inst.provenance().len());
        for (k, v) in inst.provenance() {
            let _ = writeln!(w, "{k} {}", v.replace('\n', " "));
        }
    }
    let _ = writeln!(w, "end");
    out
}

/// Parses a graph: a header `n m k s`, then `m` lines `u v` with 1-based
/// vertices.
pub fn parse_graph(text: &str) -> Result<PvcGraph> {
    let mut cur = Cursor::new(text);
    let (n, head) = cur.next("header `n m k s`")?;
    let h: Vec<usize> = head.split_whitespace().map(|t| parse_usize(n, t, "header value")).collect::<Result<_>>()?;
    let [nv, m, k, s] = h[..] else {
        return Err(Error::parse(n, "header must be `n m k s`"));
    };
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (n, l) = cur.next("an edge line")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::parse(n, "edge line must be `u v`"));
        }
        edges.push((parse_usize(n, toks[0], "vertex")?, parse_usize(n, toks[1], "vertex")?));
    }
    if let Some((n, l)) = cur.it.next() {
        return Err(Error::parse(n, format!("more edges than the header's m = {m}: `{l}`")));
    }
    PvcGraph::new(nv, edges, k, s).map_err(at_line(1))
}

pub fn serialize_graph(g: &PvcGraph) -> String {
    let mut out = format!("{} {} {} {}\n", g.n_vertices, g.m(), g.k, g.s);
    for (u, v) in &g.edges {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Parses a tiling: a header `n k`, then one line per cell
/// `i j u,v u,v ...`.
pub fn parse_tiling(text: &str) -> Result<GridTilingInstance> {
    let mut cur = Cursor::new(text);
    let (n, head) = cur.next("header `n k`")?;
    let h: Vec<usize> = head.split_whitespace().map(|t| parse_usize(n, t, "header value")).collect::<Result<_>>()?;
    let [size, k] = h[..] else {
        return Err(Error::parse(n, "header must be `n k`"));
    };
    let mut sets = BTreeMap::new();
    while let Ok((n, l)) = cur.next("a cell line") {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 3 {
            return Err(Error::parse(n, "cell line must be `i j u,v ...`"));
        }
        let cell = (parse_usize(n, toks[0], "row")?, parse_usize(n, toks[1], "column")?);
        let mut set = BTreeSet::new();
        for t in &toks[2..] {
            let (u, v) = t.split_once(',').ok_or_else(|| Error::parse(n, format!("malformed pair `{t}`, expected u,v")))?;
            set.insert((parse_usize(n, u, "pair entry")?, parse_usize(n, v, "pair entry")?));
        }
        if sets.insert(cell, set).is_some() {
            return Err(Error::parse(n, format!("cell ({}, {}) given twice", cell.0, cell.1)));
        }
    }
    GridTilingInstance::new(size, k, sets).map_err(at_line(cur.last))
}

pub fn serialize_tiling(gt: &GridTilingInstance) -> String {
    let mut out = format!("{} {}\n", gt.n, gt.k);
    for ((i, j), set) in &gt.sets {
        let _ = writeln!(out, "{i} {j} {}", join(set.iter().map(|(u, v)| format!("{u},{v}"))));
    }
    out
}

fn ids(v: &[usize]) -> String {
    format!("{{{}}}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

/// One line per search step: `step <i> cost <exact> approx <float> centres {..} [in {..} out {..}]`.
pub fn write_trace(trace: &SearchTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rho {}", trace.rho);
    let _ = writeln!(out, "iteration_bound {:.6}", trace.theoretical_bound);
    for s in &trace.steps {
        let _ = write!(out, "step {} cost {} approx {:.9} centres {}", s.iteration, s.cost, s.cost.to_f64(), ids(&s.centres));
        if let Some(sw) = &s.swap {
            let _ = write!(out, " in {} out {}", ids(&sw.swapped_in), ids(&sw.swapped_out));
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(
        out,
        "terminated {}",
        match trace.terminated {
            Termination::LocalOptimum => "local_optimum",
            Termination::MaxIterations => "max_iterations",
        }
    );
    out
}

pub fn write_optima(opt: &OptimaSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "optimal_cost {}", opt.optimal_cost);
    let _ = writeln!(out, "optimal_cost_approx {:.9}", opt.optimal_cost.to_f64());
    let _ = writeln!(out, "evaluated {}", opt.evaluated);
    let _ = writeln!(out, "optima {}", opt.solutions.len());
    for s in &opt.solutions {
        let _ = writeln!(out, "{}", ids(s));
    }
    out
}

pub fn write_verdict(v: &StabilityVerdict) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status {}", v.status);
    let _ = writeln!(out, "alpha {}", v.alpha);
    let _ = writeln!(out, "beta {}", v.beta);
    let _ = writeln!(out, "trials {}", v.trials_run);
    let _ = writeln!(out, "max_dist {}", v.max_dist);
    let _ = writeln!(out, "max_dist_approx {:.9}", v.max_dist.to_f64());
    if let Some(w) = &v.witness {
        let _ = writeln!(out, "witness_trial {}", w.trial);
        let _ = writeln!(out, "witness_original {}", ids(&w.original_optimum));
        let _ = writeln!(out, "witness_perturbed {}", ids(&w.perturbed_optimum));
        let _ = writeln!(out, "witness_dist {}", w.dist);
        let _ = write!(out, "{}", w.perturbation);
    }
    out
}

pub fn write_certificate(c: &ReductionCertificate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "source {}", c.source);
    let _ = writeln!(out, "equivalent {}", if c.holds() { "yes" } else { "no" });
    for (k, v) in &c.parameters {
        let _ = writeln!(out, "param {k} {v}");
    }
    for ch in &c.checks {
        let _ = writeln!(out, "check {} {} {}", ch.name, if ch.passed { "pass" } else { "fail" }, ch.detail);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    const MINIMAL: &str = "swapstable-instance 1
objective kmedian
k 1
metric euclidean
dimension 1
penalties no
points 2
0 1 0
1 1 2
centres 2
0 0
1 2
end
";

    #[test]
    fn minimal_file() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.k(), 1);
        assert_eq!(inst.points().len(), 2);
        assert_eq!(serialize_instance(&inst), MINIMAL);
    }

    #[test]
    fn penalties_and_decimals() {
        let text = "swapstable-instance 1\nobjective kmedian\nk 1\nmetric euclidean\ndimension 2\npenalties yes\npoints 1\n10 1 0.5 -3/6 penalty 3/1\ncentres 1\n0 0 0\nend\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.penalty_at(0), Some(&Surd::from_int(3)));
        assert_eq!(inst.points()[0].coords, vec![Coord::Exact(rat(1, 2)), Coord::Exact(rat(-1, 2))]);
        let again = serialize_instance(&inst);
        assert!(again.contains("10 1 1/2 -1/2 penalty 3"));
        assert_eq!(parse_instance(&again).unwrap(), inst);
    }

    fn error_line(text: &str) -> usize {
        match parse_instance(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformations_carry_line_numbers() {
        let bad_rational = MINIMAL.replace("1 1 2", "1 1 2/0");
        assert_eq!(error_line(&bad_rational), 9);
        let dims = MINIMAL.replace("1 1 2", "1 1 2 3");
        assert_eq!(error_line(&dims), 9);
        let dup = MINIMAL.replace("1 1 2", "0 1 2");
        assert_eq!(error_line(&dup), 9);
        let pen = MINIMAL.replace("1 1 2", "1 1 2 penalty 3");
        assert_eq!(error_line(&pen), 9);
        let neg = MINIMAL.replace("penalties no", "penalties yes").replace("0 1 0", "0 1 0 penalty 1").replace("1 1 2", "1 1 2 penalty -3");
        assert_eq!(error_line(&neg), 9);
        let header = MINIMAL.replace("objective kmedian", "objective kcentre");
        assert_eq!(error_line(&header), 2);
        assert_eq!(error_line(&MINIMAL.replace("end\n", "")), 13);
    }

    #[test]
    fn explicit_metric_round_trip() {
        let text = "swapstable-instance 1\nobjective kmeans\nk 1\nmetric explicit\ndimension 0\npenalties no\npoints 1\n0 2\ncentres 2\n0\n1\nnon_metric no\nmatrix 3\np0 c0 1\np0 c1 sqrt(2)\nc0 c1 1\nprovenance 1\nnote hand built\nend\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.points()[0].multiplicity, 2);
        let s = serialize_instance(&inst);
        assert_eq!(parse_instance(&s).unwrap(), inst);
        assert_eq!(serialize_instance(&parse_instance(&s).unwrap()), s);
        assert!(s.contains("note hand built"));
    }

    #[test]
    fn triangle_violation_rejected() {
        let text = "swapstable-instance 1\nobjective kmedian\nk 1\nmetric explicit\ndimension 0\npenalties no\npoints 1\n0 1\ncentres 2\n0\n1\nnon_metric no\nmatrix 3\np0 c0 10\np0 c1 1\nc0 c1 1\nend\n";
        assert!(matches!(parse_instance(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn graph_and_tiling_formats() {
        let g = parse_graph("# path\n3 2 1 2\n1 2\n2 3\n").unwrap();
        assert_eq!(g.edges, vec![(1, 2), (2, 3)]);
        assert_eq!(parse_graph(&serialize_graph(&g)).unwrap(), g);
        assert!(matches!(parse_graph("3 2 1 2\n1 2\n"), Err(Error::Parse { .. })));

        let t = parse_tiling("2 2\n1 1 2,2\n1 2 1,1\n2 1 1,1\n2 2 2,2 1,2\n").unwrap();
        assert_eq!(t.sets[&(2, 2)].len(), 2);
        assert_eq!(parse_tiling(&serialize_tiling(&t)).unwrap(), t);
        assert!(parse_tiling("2 2\n1 1 2,2\n").is_err());
    }
}
