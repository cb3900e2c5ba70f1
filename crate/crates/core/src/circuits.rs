//! RLC netlists and their modified nodal analysis.
//!
//! # Netlist format
//!
//! One statement per line; `#` starts a comment, blank lines are ignored.
//!
//! ```text
//! KIND node+ node- nominal [tolerance]   element; KIND starts with C, L or G
//! VIN node+ node-                        ideal voltage source (the input)
//! OUT node                               output node voltage
//! ```
//!
//! Capacitances are in farad, inductances in henry and conductances in
//! siemens. The node `0` (or `gnd`) is ground. An element with a positive
//! tolerance `t` becomes a random parameter uniform on
//! `[nominal·(1−t), nominal·(1+t)]`; parameters are numbered in file order.
//! Without a tolerance the element is deterministic.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::Distribution1D;
use crate::descriptor::{pencil_spectrum, DEFAULT_DIM_CAP};
use crate::error::{Error, Result};
use crate::galerkin::{AffineDecomposition, Evaluator, ParametricSystem, SystemMatrices};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    C,
    L,
    G,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub nodes: (String, String),
    pub nominal: f64,
    pub tolerance: f64,
}

impl Element {
    pub fn is_random(&self) -> bool {
        self.tolerance > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitNetlist {
    pub elements: Vec<Element>,
    pub input: (String, String),
    pub output: String,
}

fn is_ground(node: &str) -> bool {
    node == "0" || node.eq_ignore_ascii_case("gnd")
}

pub fn parse_netlist(text: &str) -> Result<CircuitNetlist> {
    let mut elements: Vec<Element> = Vec::new();
    let mut element_lines = Vec::new();
    let mut input: Option<((String, String), usize)> = None;
    let mut output: Option<(String, usize)> = None;
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line, message };
        let fields: Vec<&str> = content.split_whitespace().collect();
        let head = fields[0];
        if head.eq_ignore_ascii_case("VIN") {
            if let Some((_, first)) = &input {
                return Err(err(format!("duplicate source; the first one is on line {first}")));
            }
            if fields.len() != 3 {
                return Err(err("expected `VIN node+ node-`".into()));
            }
            if fields[1] == fields[2] {
                return Err(err("source terminals must differ".into()));
            }
            input = Some(((fields[1].to_string(), fields[2].to_string()), line));
            continue;
        }
        if head.eq_ignore_ascii_case("OUT") {
            if let Some((_, first)) = &output {
                return Err(err(format!("duplicate output; the first one is on line {first}")));
            }
            if fields.len() != 2 {
                return Err(err("expected `OUT node`".into()));
            }
            if is_ground(fields[1]) {
                return Err(err("the output node cannot be ground".into()));
            }
            output = Some((fields[1].to_string(), line));
            continue;
        }
        let kind = match head.chars().next().map(|c| c.to_ascii_uppercase()) {
            Some('C') => ElementKind::C,
            Some('L') => ElementKind::L,
            Some('G') => ElementKind::G,
            _ => return Err(err(format!("unknown element kind `{head}`"))),
        };
        if fields.len() != 4 && fields.len() != 5 {
            return Err(err(format!("expected `{head} node+ node- nominal [tolerance]`")));
        }
        if let Some(first) = names.get(head) {
            return Err(err(format!("element `{head}` already defined on line {first}")));
        }
        if fields[1] == fields[2] {
            return Err(err(format!("element `{head}` connects node {} to itself", fields[1])));
        }
        let nominal: f64 = fields[3]
            .parse()
            .map_err(|_| err(format!("invalid value `{}`", fields[3])))?;
        if !(nominal > 0.0) || !nominal.is_finite() {
            return Err(err(format!("value of `{head}` must be positive, got {}", fields[3])));
        }
        let tolerance: f64 = match fields.get(4) {
            Some(t) => t.parse().map_err(|_| err(format!("invalid tolerance `{t}`")))?,
            None => 0.0,
        };
        if !(0.0..1.0).contains(&tolerance) {
            return Err(err(format!("tolerance must lie in [0, 1), got {tolerance}")));
        }
        names.insert(head.to_string(), line);
        element_lines.push(line);
        elements.push(Element {
            name: head.to_string(),
            kind,
            nodes: (fields[1].to_string(), fields[2].to_string()),
            nominal,
            tolerance,
        });
    }

    let end = last_line.max(1);
    let ((vp, vn), vin_line) = input.ok_or(Error::Parse {
        line: end,
        message: "missing `VIN` statement".into(),
    })?;
    let (out, out_line) = output.ok_or(Error::Parse {
        line: end,
        message: "missing `OUT` statement".into(),
    })?;

    // Terminal count per node; a node touched once is dangling.
    let mut degree: HashMap<&str, (usize, usize)> = HashMap::new();
    for (e, &line) in elements.iter().zip(&element_lines) {
        for node in [&e.nodes.0, &e.nodes.1] {
            let entry = degree.entry(node.as_str()).or_insert((0, line));
            entry.0 += 1;
        }
    }
    for node in [&vp, &vn] {
        degree.entry(node.as_str()).or_insert((0, vin_line)).0 += 1;
    }
    if !degree.contains_key(out.as_str()) {
        return Err(Error::Parse {
            line: out_line,
            message: format!("output node {out} is not connected to any element"),
        });
    }
    let mut dangling: Vec<(&str, usize)> = degree
        .iter()
        .filter(|(node, (count, _))| !is_ground(node) && *count < 2)
        .map(|(node, (_, line))| (*node, *line))
        .collect();
    dangling.sort_by_key(|&(node, line)| (line, node.to_string()));
    if let Some((node, line)) = dangling.first() {
        return Err(Error::Parse {
            line: *line,
            message: format!("dangling node {node}"),
        });
    }

    // Every node must reach ground.
    let mut parent: HashMap<String, String> = HashMap::new();
    fn find(parent: &mut HashMap<String, String>, x: &str) -> String {
        let canon = if is_ground(x) { "0".to_string() } else { x.to_string() };
        let p = parent.entry(canon.clone()).or_insert_with(|| canon.clone()).clone();
        if p == canon {
            return p;
        }
        let root = find(parent, &p);
        parent.insert(canon, root.clone());
        root
    }
    let mut union = |a: &str, b: &str| {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent.insert(ra, rb);
        }
    };
    for e in &elements {
        union(&e.nodes.0, &e.nodes.1);
    }
    union(&vp, &vn);
    let ground = find(&mut parent, "0");
    for (e, &line) in elements.iter().zip(&element_lines) {
        if find(&mut parent, &e.nodes.0) != ground {
            return Err(Error::Parse {
                line,
                message: format!("element `{}` is not connected to ground", e.name),
            });
        }
    }
    if find(&mut parent, &vp) != ground {
        return Err(Error::Parse {
            line: vin_line,
            message: "the source is not connected to ground".into(),
        });
    }

    Ok(CircuitNetlist {
        elements,
        input: (vp, vn),
        output: out,
    })
}

impl CircuitNetlist {
    /// Netlist text that parses back to the same netlist.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.elements {
            let _ = write!(out, "{} {} {} {:e}", e.name, e.nodes.0, e.nodes.1, e.nominal);
            if e.tolerance > 0.0 {
                let _ = write!(out, " {}", e.tolerance);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "VIN {} {}", self.input.0, self.input.1);
        let _ = writeln!(out, "OUT {}", self.output);
        out
    }

    pub fn count(&self, kind: ElementKind) -> usize {
        self.elements.iter().filter(|e| e.kind == kind).count()
    }

    /// Random elements in parameter order.
    pub fn parameters(&self) -> Vec<&Element> {
        self.elements.iter().filter(|e| e.is_random()).collect()
    }

    pub fn q(&self) -> usize {
        self.parameters().len()
    }

    pub fn distributions(&self) -> Vec<Distribution1D> {
        self.parameters()
            .iter()
            .map(|e| Distribution1D::Uniform {
                lower: e.nominal * (1.0 - e.tolerance),
                upper: e.nominal * (1.0 + e.tolerance),
            })
            .collect()
    }

    /// Non-ground nodes in order of first appearance.
    pub fn nodes(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        let mut push = |n: &String| {
            if !is_ground(n) && !seen.contains(n) {
                seen.push(n.clone());
            }
        };
        for e in &self.elements {
            push(&e.nodes.0);
            push(&e.nodes.1);
        }
        push(&self.input.0);
        push(&self.input.1);
        seen
    }

    /// Number of MNA unknowns: node voltages and inductor currents.
    pub fn n(&self) -> usize {
        self.nodes().len() + self.count(ElementKind::L)
    }
}

/// Unknown layout: node voltages first, then inductor currents.
struct Layout {
    node: HashMap<String, usize>,
    inductor: Vec<Option<usize>>,
    n: usize,
    source: (Option<usize>, Option<usize>),
    output: usize,
}

impl Layout {
    fn new(net: &CircuitNetlist) -> Self {
        let nodes = net.nodes();
        let node: HashMap<String, usize> = nodes.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut next = nodes.len();
        let inductor = net
            .elements
            .iter()
            .map(|e| {
                (e.kind == ElementKind::L).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let idx = |s: &String| if is_ground(s) { None } else { node.get(s).copied() };
        Layout {
            source: (idx(&net.input.0), idx(&net.input.1)),
            output: node[&net.output],
            inductor,
            n: next,
            node,
        }
    }

    fn idx(&self, s: &str) -> Option<usize> {
        if is_ground(s) {
            None
        } else {
            self.node.get(s).copied()
        }
    }
}

#[derive(Default)]
struct Stamps {
    e: Vec<(usize, usize, f64)>,
    a: Vec<(usize, usize, f64)>,
}

// Stamp of element `k` with value `value` into E and A of E ẋ = A x + B u.
fn stamp_element(layout: &Layout, k: usize, el: &Element, value: f64, out: &mut Stamps) {
    let a = layout.idx(&el.nodes.0);
    let b = layout.idx(&el.nodes.1);
    match el.kind {
        ElementKind::C | ElementKind::G => {
            let (target, sign) = match el.kind {
                ElementKind::C => (&mut out.e, 1.0),
                _ => (&mut out.a, -1.0),
            };
            if let Some(i) = a {
                target.push((i, i, sign * value));
            }
            if let Some(j) = b {
                target.push((j, j, sign * value));
            }
            if let (Some(i), Some(j)) = (a, b) {
                target.push((i, j, -sign * value));
                target.push((j, i, -sign * value));
            }
        }
        ElementKind::L => {
            let cur = layout.inductor[k].expect("inductor has a current unknown");
            out.e.push((cur, cur, value));
            if let Some(i) = a {
                out.a.push((i, cur, -1.0));
                out.a.push((cur, i, 1.0));
            }
            if let Some(j) = b {
                out.a.push((j, cur, 1.0));
                out.a.push((cur, j, -1.0));
            }
        }
    }
}

// The source current appears with + in row n+ and − in row n−. Adding row
// n+ to row n− removes it, and row n+ is then replaced by the constraint
// −(v+ − v−) + u = 0.
fn eliminate_source(layout: &Layout, triplets: Vec<(usize, usize, f64)>) -> Vec<(usize, usize, f64)> {
    let (Some(plus), minus) = layout.source else {
        // n+ is ground: mirror the roles.
        let minus = layout.source.1.expect("source terminals differ");
        let mut out = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            if i != minus {
                out.push((i, j, v));
            }
        }
        return out;
    };
    let mut out = Vec::with_capacity(triplets.len() * 2);
    for (i, j, v) in triplets {
        if i == plus {
            if let Some(m) = minus {
                out.push((m, j, v));
            }
        } else {
            out.push((i, j, v));
        }
    }
    out
}

type Triplets = Vec<(usize, usize, f64)>;

fn constraint(layout: &Layout) -> (Triplets, Triplets) {
    let (plus, minus) = layout.source;
    // Row that carries the constraint, and the sign that keeps B = +1.
    let (row, sign) = match plus {
        Some(p) => (p, 1.0),
        None => (minus.expect("source terminals differ"), -1.0),
    };
    let mut a = Vec::new();
    if let Some(p) = plus {
        a.push((row, p, -sign));
    }
    if let Some(m) = minus {
        a.push((row, m, sign));
    }
    (a, vec![(row, 0, 1.0)])
}

fn finish(layout: &Layout, stamps: Stamps, with_source: bool) -> Result<SystemMatrices> {
    let n = layout.n;
    let e = eliminate_source(layout, stamps.e);
    let mut a = eliminate_source(layout, stamps.a);
    let mut b = Vec::new();
    let mut c = Vec::new();
    if with_source {
        let (ca, cb) = constraint(layout);
        a.extend(ca);
        b = cb;
        c.push((0, layout.output, 1.0));
    }
    Ok(SystemMatrices {
        e: CscMatrix::from_triplets(n, n, &e)?,
        a: CscMatrix::from_triplets(n, n, &a)?,
        b: CscMatrix::from_triplets(n, 1, &b)?,
        c: CscMatrix::from_triplets(1, n, &c)?,
    })
}

/// Stamps every element with the given values (one per element).
fn stamp_all(net: &CircuitNetlist, layout: &Layout, values: &[f64]) -> Result<SystemMatrices> {
    let mut stamps = Stamps::default();
    for (k, (el, &v)) in net.elements.iter().zip(values).enumerate() {
        stamp_element(layout, k, el, v, &mut stamps);
    }
    finish(layout, stamps, true)
}

/// Affine parametric descriptor system of the netlist. The evaluator stamps
/// element values directly; the affine decomposition holds one unit stamp
/// per random element.
pub fn mna_assemble(net: &CircuitNetlist) -> Result<ParametricSystem> {
    let layout = Arc::new(Layout::new(net));
    let random: Vec<usize> = (0..net.elements.len()).filter(|&k| net.elements[k].is_random()).collect();

    let nominal_values: Vec<f64> = net.elements.iter().map(|e| e.nominal).collect();
    let nominal = stamp_all(net, &layout, &nominal_values)?.into_system()?;
    let report = pencil_spectrum(&nominal, DEFAULT_DIM_CAP).map_err(|e| match e {
        Error::Regularity(msg) => Error::Modelling(format!("singular circuit equations: {msg}")),
        other => other,
    })?;
    if report.index_at_most_one == Some(false) {
        return Err(Error::Modelling(
            "the circuit equations have index greater than one (inductor cutset or capacitor/source loop)".into(),
        ));
    }

    let mut constant = Stamps::default();
    for (k, el) in net.elements.iter().enumerate() {
        if !el.is_random() {
            stamp_element(&layout, k, el, el.nominal, &mut constant);
        }
    }
    let constant = finish(&layout, constant, true)?;
    let terms = random
        .iter()
        .map(|&k| {
            let mut s = Stamps::default();
            stamp_element(&layout, k, &net.elements[k], 1.0, &mut s);
            // Inductor incidence entries do not scale with the value.
            if net.elements[k].kind == ElementKind::L {
                s.a.clear();
            }
            finish(&layout, s, false)
        })
        .collect::<Result<Vec<_>>>()?;
    // Inductor incidence is value independent and belongs to the constant part.
    let mut incidence = Stamps::default();
    for (k, el) in net.elements.iter().enumerate() {
        if el.kind == ElementKind::L && el.is_random() {
            stamp_element(&layout, k, el, 0.0, &mut incidence);
        }
    }
    incidence.e.clear();
    let incidence = finish(&layout, incidence, false)?;
    let constant = SystemMatrices {
        a: constant.a.add(&incidence.a)?,
        ..constant
    };
    let affine = AffineDecomposition { constant, terms };

    let net_arc = Arc::new(net.clone());
    let random_arc = Arc::new(random);
    let layout_eval = Arc::clone(&layout);
    let evaluator: Evaluator = Arc::new(move |p: &[f64]| {
        if p.len() != random_arc.len() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", random_arc.len(), p.len())));
        }
        let mut values: Vec<f64> = net_arc.elements.iter().map(|e| e.nominal).collect();
        for (&k, &v) in random_arc.iter().zip(p) {
            values[k] = v;
        }
        stamp_all(&net_arc, &layout_eval, &values)
    });
    ParametricSystem::new(layout.n, net.distributions(), evaluator).with_affine(affine)
}

/// Thirteenth-order Butterworth prototype coefficients.
fn butterworth(k: usize) -> f64 {
    2.0 * ((2 * k - 1) as f64 * std::f64::consts::PI / 26.0).sin()
}

/// Cut-off angular frequency of the built-in low-pass benchmark.
pub const BENCHMARK_CUTOFF: f64 = 1e5;

/// Ladder low-pass filter with 7 capacitances, 6 inductances and 8
/// conductances, all with 10 % tolerance: a 50 Ω source conductance, six
/// inductor sections each followed by a 0.5 Ω series loss, shunt
/// capacitances at the seven section nodes and a 50 Ω load at node 14.
pub fn lowpass_benchmark() -> CircuitNetlist {
    let (r0, wc, tol) = (50.0, BENCHMARK_CUTOFF, 0.1);
    let mut text = String::from("# low-pass ladder benchmark\nG1 1 2 0.02 0.1\n");
    for k in 1..=7 {
        let node = 2 * k;
        let c = butterworth(2 * k - 1) / (wc * r0);
        let _ = writeln!(text, "C{k} {node} 0 {c:e} {tol}");
        if k < 7 {
            let l = butterworth(2 * k) * r0 / wc;
            let _ = writeln!(text, "L{k} {node} {} {l:e} {tol}", node + 1);
            let _ = writeln!(text, "G{} {} {} 2 {tol}", k + 1, node + 1, node + 2);
        }
    }
    text.push_str("G8 14 0 0.02 0.1\nVIN 1 0\nOUT 14\n");
    parse_netlist(&text).expect("benchmark netlist is valid")
}

/// Small RLC circuit with three random parameters and four unknowns.
pub fn desk_netlist() -> CircuitNetlist {
    parse_netlist(
        "G1 1 2 1\nC1 2 0 1 0.1\nL1 2 3 1 0.1\nC2 3 0 1 0.1\nG2 3 0 1\nVIN 1 0\nOUT 3\n",
    )
    .expect("desk netlist is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    const RC: &str = "G1 1 2 1.0 0.1\nC1 2 0 1e-6 0.1\nVIN 1 0\nOUT 2";

    #[test]
    fn rc_lowpass() {
        let net = parse_netlist(RC).unwrap();
        assert_eq!(net.q(), 2);
        let sys = mna_assemble(&net).unwrap().nominal().unwrap();
        assert_eq!(sys.n(), 2);
        let h0 = sys.transfer_eval(Complex64::new(0.0, 0.0)).unwrap()[0];
        assert!((h0 - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        // G / (G + sC) with G = 1, C = 1e-6 at s = 1e6 i.
        let s = Complex64::new(0.0, 1e6);
        let h = sys.transfer_eval(s).unwrap()[0];
        let want = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + s * 1e-6);
        assert!((h - want).norm() < 1e-14);
    }

    #[test]
    fn negative_value_is_rejected() {
        let err = parse_netlist("C1 2 0 -1e-6").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn unknown_kind() {
        let err = parse_netlist("G1 1 2 1\nR1 2 0 1\nVIN 1 0\nOUT 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn duplicate_source() {
        let err = parse_netlist("G1 1 2 1\nC1 2 0 1\nVIN 1 0\nVIN 2 0\nOUT 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn dangling_node() {
        let err = parse_netlist("G1 1 2 1\nC1 2 0 1\nC2 2 3 1\nVIN 1 0\nOUT 2\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                message: "dangling node 3".into()
            }
        );
    }

    #[test]
    fn inductor_cutset_is_index_two() {
        let net = parse_netlist("L1 1 2 1 0.1\nL2 2 0 1 0.1\nVIN 1 0\nOUT 2\n").unwrap();
        assert!(matches!(mna_assemble(&net), Err(Error::Modelling(_))));
    }

    #[test]
    fn round_trip() {
        let net = lowpass_benchmark();
        assert_eq!(parse_netlist(&net.to_text()).unwrap(), net);
        let desk = desk_netlist();
        assert_eq!(parse_netlist(&desk.to_text()).unwrap(), desk);
    }

    #[test]
    fn benchmark_structure() {
        let net = lowpass_benchmark();
        assert_eq!(
            (net.count(ElementKind::C), net.count(ElementKind::L), net.count(ElementKind::G)),
            (7, 6, 8)
        );
        assert_eq!(net.q(), 21);
        assert_eq!(net.nodes().len(), 14);
        assert_eq!(net.n(), 20);
    }

    #[test]
    fn affine_matches_evaluator() {
        let psys = mna_assemble(&lowpass_benchmark()).unwrap();
        let d = psys.distributions().to_vec();
        for t in [0.1, 0.5, 0.93] {
            let p: Vec<f64> = d.iter().enumerate().map(|(l, x)| {
                let u = (t * (l as f64 + 1.0) * 0.618).fract();
                x.lower() + u * (x.upper() - x.lower())
            }).collect();
            assert!(psys.affine_mismatch(&p).unwrap() < 1e-12);
        }
    }
}
