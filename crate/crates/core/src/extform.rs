//! Extended formulations: a system `A x >= b` whose rows are the paths of an
//! NZDD is equivalent to one inequality per edge over extra node potentials.

use std::collections::{BTreeMap, BTreeSet};

use crate::build::{compress, ElementOrder};
use crate::error::{Error, Result};
use crate::family::SubsetFamily;
use crate::nzdd::{Nzdd, NzddStats, LEAF, ROOT};
use crate::system::{ConstraintSystem, Row, Sense, VarKind};

/// Value carried by one ground element along a path.
#[derive(Clone, Debug, PartialEq)]
pub enum ElementTerm {
    /// Contributes variable `var` of the extended system with coefficient 1.
    /// That variable equals `factor * x[orig]` for the original `x`.
    Var { var: usize, orig: usize, factor: f64 },
    /// A fixed contribution; right-hand sides are encoded this way.
    Constant(f64),
}

impl ElementTerm {
    fn value(&self, x: &[f64]) -> f64 {
        match *self {
            ElementTerm::Var { orig, factor, .. } => factor * x[orig],
            ElementTerm::Constant(c) => c,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtendedSystem {
    /// Original variables first (same indices), then node potentials, then
    /// auxiliary variables of the integer encodings.
    pub system: ConstraintSystem,
    pub origin: Nzdd,
    pub num_original: usize,
    /// Potential variable of each node; `None` for root and leaf, which are
    /// fixed at zero and substituted out.
    pub node_var: Vec<Option<usize>>,
    pub elements: Vec<ElementTerm>,
    /// Rows after the `|E|` edge rows that tie auxiliaries to `x`.
    pub aux_rows: usize,
    /// Input rows dropped as exact duplicates before compression.
    pub duplicate_rows: usize,
}

impl ExtendedSystem {
    pub fn num_edge_rows(&self) -> usize {
        self.origin.num_edges()
    }

    pub fn num_node_vars(&self) -> usize {
        self.node_var.iter().flatten().count()
    }

    fn edge_weight(&self, e: usize, x: &[f64]) -> f64 {
        self.origin
            .edge(e)
            .labels
            .iter()
            .map(|&l| self.elements[l as usize].value(x))
            .sum()
    }

    /// Shortest root-to-node distances under edge weights `sum of element
    /// values`. These are the largest feasible potentials.
    fn potentials(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.origin;
        let mut dist = vec![f64::INFINITY; g.node_count()];
        dist[ROOT] = 0.0;
        for &u in g.topological_order() {
            if dist[u] == f64::INFINITY {
                continue;
            }
            for &e in g.out_edges(u) {
                let v = g.edge(e).to;
                let d = dist[u] + self.edge_weight(e, x);
                if d < dist[v] {
                    dist[v] = d;
                }
            }
        }
        dist
    }

    /// Whether some choice of the extra variables satisfies every row, given
    /// the original variables `x`.
    pub fn feasible(&self, x: &[f64]) -> bool {
        assert_eq!(x.len(), self.num_original, "x has the wrong length");
        self.potentials(x)[LEAF] >= -FEAS_TOL
    }

    /// Full assignment for the extended system: `x`, then the shortest-path
    /// potentials, then auxiliary values.
    pub fn complete(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.num_original, "x has the wrong length");
        let mut full = vec![0.0; self.system.num_vars()];
        full[..x.len()].copy_from_slice(x);
        let dist = self.potentials(x);
        for (v, var) in self.node_var.iter().enumerate() {
            if let Some(var) = *var {
                full[var] = dist[v];
            }
        }
        for t in &self.elements {
            if let ElementTerm::Var { var, orig, factor } = *t {
                full[var] = factor * x[orig];
            }
        }
        full
    }

    /// Projects a solution of the extended system onto the original variables.
    pub fn project(&self, full: &[f64]) -> Vec<f64> {
        full[..self.num_original].to_vec()
    }
}

const FEAS_TOL: f64 = 1e-9;

/// `feasible_extended(ext, x)` as a free function.
pub fn feasible_extended(ext: &ExtendedSystem, x: &[f64]) -> bool {
    ext.feasible(x)
}

/// Sets of a 0/1 system: row `i` becomes the support of `(a_i, b_i)`, with
/// element `n` standing for `b_i = 1`. Returns the family and how many
/// duplicate rows were merged.
pub fn matrix_to_family(sys: &ConstraintSystem) -> Result<(SubsetFamily, usize)> {
    let n = sys.num_vars();
    let mut sets = Vec::with_capacity(sys.num_rows());
    for (i, r) in sys.rows.iter().enumerate() {
        if r.sense != Sense::Ge {
            return Err(Error::InvalidParameter(format!(
                "row {i} is not a >= row; 0/1 compression needs A x >= b"
            )));
        }
        let mut set = Vec::with_capacity(r.coeffs.len() + 1);
        for &(j, a) in &r.coeffs {
            if a != 1.0 {
                return Err(Error::NonBinaryCoefficient { row: i, value: a });
            }
            set.push(j as u32);
        }
        match r.rhs {
            0.0 => {}
            1.0 => set.push(n as u32),
            b => return Err(Error::NonBinaryCoefficient { row: i, value: b }),
        }
        sets.push(set);
    }
    let (family, dropped) = SubsetFamily::new_dedup(n + 1, sets)?;
    if dropped > 0 {
        log::warn!("merged {dropped} duplicate rows");
    }
    Ok((family, dropped))
}

fn materialize(
    sys: &ConstraintSystem,
    g: Nzdd,
    elements: Vec<ElementTerm>,
    aux: Vec<(String, usize, f64)>,
    duplicate_rows: usize,
) -> ExtendedSystem {
    let num_original = sys.num_vars();
    let mut out = ConstraintSystem {
        vars: sys.vars.clone(),
        rows: Vec::with_capacity(g.num_edges() + aux.len()),
        objective: sys.objective.clone(),
    };
    let mut node_var = vec![None; g.node_count()];
    for (v, slot) in node_var.iter_mut().enumerate().skip(2) {
        *slot = Some(out.add_named_var(
            format!("s{v}"),
            VarKind::Real,
            f64::NEG_INFINITY,
            f64::INFINITY,
        ));
    }
    // Callers number auxiliaries from `num_original`; they go after the
    // potentials.
    let aux_base = out.num_vars();
    for (name, _, _) in &aux {
        out.add_named_var(name.clone(), VarKind::Real, f64::NEG_INFINITY, f64::INFINITY);
    }
    let elements: Vec<ElementTerm> = elements
        .into_iter()
        .map(|t| match t {
            ElementTerm::Var { var, orig, factor } if var >= num_original => ElementTerm::Var {
                var: aux_base + (var - num_original),
                orig,
                factor,
            },
            t => t,
        })
        .collect();
    for e in g.edges() {
        // s_u - s_v + sum of element terms >= 0
        let mut coeffs = Vec::with_capacity(e.labels.len() + 2);
        let mut rhs = 0.0;
        if let Some(su) = node_var[e.from] {
            coeffs.push((su, 1.0));
        }
        if let Some(sv) = node_var[e.to] {
            coeffs.push((sv, -1.0));
        }
        for &l in &e.labels {
            match elements[l as usize] {
                ElementTerm::Var { var, .. } => coeffs.push((var, 1.0)),
                ElementTerm::Constant(c) => rhs -= c,
            }
        }
        out.add_row(Row::ge(coeffs, rhs));
    }
    for (k, (_, orig, factor)) in aux.iter().enumerate() {
        out.add_row(Row::new(
            vec![(aux_base + k, 1.0), (*orig, -factor)],
            Sense::Eq,
            0.0,
        ));
    }
    ExtendedSystem {
        system: out,
        origin: g,
        num_original,
        node_var,
        aux_rows: aux.len(),
        elements,
        duplicate_rows,
    }
}

fn binary_elements(n: usize) -> Vec<ElementTerm> {
    let mut elements: Vec<ElementTerm> = (0..n)
        .map(|j| ElementTerm::Var {
            var: j,
            orig: j,
            factor: 1.0,
        })
        .collect();
    elements.push(ElementTerm::Constant(-1.0));
    elements
}

/// Rewrites a 0/1 system using a diagram `g` whose language is its row
/// family. The result has `|E|` rows and `|V| - 2` extra free variables.
pub fn extend_binary(sys: &ConstraintSystem, g: &Nzdd) -> Result<ExtendedSystem> {
    let (family, dropped) = matrix_to_family(sys)?;
    if g.ground_size() != family.ground_size()
        || g.num_paths() != family.len() as u128
        || family.sets().iter().any(|s| g.find_path(s).is_none())
    {
        return Err(Error::LanguageMismatch);
    }
    Ok(materialize(sys, g.clone(), binary_elements(sys.num_vars()), Vec::new(), dropped))
}

/// Compresses the rows of a 0/1 system and builds the extended formulation.
pub fn compress_binary(
    sys: &ConstraintSystem,
    order: &ElementOrder,
) -> Result<(ExtendedSystem, NzddStats)> {
    let (family, dropped) = matrix_to_family(sys)?;
    let (g, stats) = compress(&family, order)?;
    Ok((
        materialize(sys, g, binary_elements(sys.num_vars()), Vec::new(), dropped),
        stats,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum IntMode {
    /// One element per `(variable, bit, sign)`; coefficients are written in
    /// base two.
    #[default]
    BinaryEncoding,
    /// One element per `(coefficient, variable)` pair that occurs.
    Sigma,
}

fn as_int(v: f64, row: usize) -> Result<i64> {
    if v.fract() != 0.0 || !v.is_finite() || v.abs() > (1u64 << 52) as f64 {
        return Err(Error::NonIntegerCoefficient { row, value: v });
    }
    Ok(v as i64)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Key {
    // (variable, coefficient)
    Coef(usize, i64),
    // (variable, bit, negative)
    Bit(usize, u32, bool),
    // right-hand side value
    Rhs(i64),
    // (bit, negative) of the right-hand side
    RhsBit(u32, bool),
}

fn bits(mut v: u64) -> impl Iterator<Item = u32> {
    let mut t = 0;
    std::iter::from_fn(move || {
        while v != 0 {
            let bit = v & 1 == 1;
            v >>= 1;
            t += 1;
            if bit {
                return Some(t - 1);
            }
        }
        None
    })
}

/// Extended formulation for integer coefficients. Rows of any sense are
/// first rewritten as `>=` rows. Each row becomes a set of ground elements
/// whose values sum to `a_i x - b_i`, and auxiliary variables tied to `x` by
/// equalities carry the scaled copies of `x`.
pub fn extend_integer(
    sys: &ConstraintSystem,
    mode: IntMode,
    order: &ElementOrder,
) -> Result<(ExtendedSystem, NzddStats)> {
    let n = sys.num_vars();
    let mut rows: Vec<Vec<Key>> = Vec::new();
    for (i, r) in sys.ge_rows().iter().enumerate() {
        let mut keys = Vec::new();
        for &(j, a) in &r.coeffs {
            let a = as_int(a, i)?;
            match mode {
                IntMode::Sigma => keys.push(Key::Coef(j, a)),
                IntMode::BinaryEncoding => {
                    keys.extend(bits(a.unsigned_abs()).map(|t| Key::Bit(j, t, a < 0)))
                }
            }
        }
        let b = as_int(r.rhs, i)?;
        if b != 0 {
            match mode {
                IntMode::Sigma => keys.push(Key::Rhs(b)),
                IntMode::BinaryEncoding => {
                    keys.extend(bits(b.unsigned_abs()).map(|t| Key::RhsBit(t, b < 0)))
                }
            }
        }
        rows.push(keys);
    }

    let ids: BTreeMap<Key, u32> = rows
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<Key>>()
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i as u32))
        .collect();
    let mut elements = Vec::with_capacity(ids.len());
    let mut aux = Vec::new();
    for &k in ids.keys() {
        let term = match k {
            Key::Coef(j, a) => {
                aux.push((format!("u{}", aux.len()), j, a as f64));
                ElementTerm::Var {
                    var: n + aux.len() - 1,
                    orig: j,
                    factor: a as f64,
                }
            }
            Key::Bit(j, t, neg) => {
                let f = if neg { -1.0 } else { 1.0 } * (1u64 << t) as f64;
                aux.push((format!("y{}", aux.len()), j, f));
                ElementTerm::Var {
                    var: n + aux.len() - 1,
                    orig: j,
                    factor: f,
                }
            }
            Key::Rhs(b) => ElementTerm::Constant(-(b as f64)),
            Key::RhsBit(t, neg) => {
                ElementTerm::Constant(if neg { 1.0 } else { -1.0 } * (1u64 << t) as f64)
            }
        };
        elements.push(term);
    }
    let sets: Vec<Vec<u32>> = rows
        .iter()
        .map(|keys| keys.iter().map(|k| ids[k]).collect())
        .collect();
    let (family, dropped) = SubsetFamily::new_dedup(ids.len(), sets)?;
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let (g, stats) = compress(&family, order)?;
    Ok((materialize(sys, g, elements, aux, dropped), stats))
}
