//! Integer programs that train binarized linear classifiers.
//!
//! Each weight `W[f][c] = w+ - w-` is encoded by two binaries that may not both
//! be set. Class scores `y[c][i] = sum_f W[f][c] x[f][i] + b[c]` are tied to the
//! weights by equalities, and each training instance gets a pair `e+ / e-` that
//! measures how far its true class beats (or trails) the best other class:
//!
//! ```text
//! min  -alpha * sum e+  +  beta * sum e-  +  sum (w+ + w-)
//! s.t. y[l_i][i] >= y[c][i] + e+[i] - e-[i]     for every c != l_i
//! ```
//!
//! The pseudo-Boolean variant replaces every integer variable by
//! `lower + sum_q 2^(q-1) bit_q` plus the constraint that this stays below the
//! upper bound.

use std::collections::HashMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::dataset::BinaryDataset;
use crate::error::{Error, Result};
use crate::model_ir::{Domain, LinearExpr, ModelIR, Sense, VarId};
use crate::ratio::Rational;

/// Objective weights for the correct-margin reward and the wrong-margin penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hyperparams {
    pub alpha: Rational,
    pub beta: Rational,
}

impl Hyperparams {
    pub fn new(alpha: Rational, beta: Rational) -> Result<Self> {
        let zero = Rational::from_integer(0);
        if alpha <= zero || beta <= zero {
            return Err(Error::Hyperparams(format!(
                "alpha and beta must be positive (alpha={alpha}, beta={beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// `beta = 2 * alpha`.
    pub fn with_default_beta(alpha: Rational) -> Result<Self> {
        Self::new(alpha, alpha * 2)
    }

    pub fn from_integers(alpha: i64, beta: i64) -> Result<Self> {
        Self::new(Rational::from_integer(alpha), Rational::from_integer(beta))
    }

    /// Integer objective coefficients `(size, alpha, beta)` after multiplying
    /// through by the common denominator of alpha and beta.
    pub fn scaled(&self) -> Result<(i64, i64, i64)> {
        let a = *self.alpha.denom();
        let b = *self.beta.denom();
        let lcm = a / gcd(a, b) * b;
        let alpha = Ratio::from_integer(lcm) * self.alpha;
        let beta = Ratio::from_integer(lcm) * self.beta;
        debug_assert!(alpha.is_integer() && beta.is_integer());
        Ok((lcm, alpha.to_integer(), beta.to_integer()))
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Bounds and bit count for one quantized integer variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizationScheme {
    pub lower: i64,
    pub upper: i64,
    pub bits: u32,
}

impl QuantizationScheme {
    /// `bits = ceil(log2(upper - lower + 1))`; a single-value range needs no bits.
    pub fn new(lower: i64, upper: i64) -> Result<Self> {
        if lower > upper {
            return Err(Error::BoundInversion {
                name: "quantized variable".into(),
                lower,
                upper,
            });
        }
        let span = (upper - lower) as u64;
        let bits = 64 - span.leading_zeros();
        Ok(Self { lower, upper, bits })
    }
}

/// Finite bounds for the integer variable families of the encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsPolicy {
    pub bias: QuantizationScheme,
    pub score: QuantizationScheme,
    pub margin: QuantizationScheme,
}

/// `b in [-F, F]`, `y in [-2F, 2F]`, `e+/e- in [0, 4F]`.
///
/// A bias beyond `F` in magnitude cannot change any argmax that a smaller
/// bias would not, scores add a weighted sum of at most `F` ones, and a margin
/// is a difference of two scores.
pub fn default_bounds(train: &BinaryDataset) -> BoundsPolicy {
    let f = train.feature_count() as i64;
    BoundsPolicy {
        bias: QuantizationScheme::new(-f, f).unwrap(),
        score: QuantizationScheme::new(-2 * f, 2 * f).unwrap(),
        margin: QuantizationScheme::new(0, 4 * f).unwrap(),
    }
}

/// How an integer quantity of the classifier is represented in a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntEncoding {
    Direct(VarId),
    /// `lower + sum_q 2^q * bits[q]` (bits listed least significant first).
    Quantized {
        lower: i64,
        bits: Vec<VarId>,
    },
}

impl IntEncoding {
    pub fn value(&self, values: &[i64]) -> i64 {
        match self {
            IntEncoding::Direct(v) => values[v.0],
            IntEncoding::Quantized { lower, bits } => {
                lower
                    + bits
                        .iter()
                        .enumerate()
                        .map(|(q, b)| values[b.0] << q)
                        .sum::<i64>()
            }
        }
    }

    /// Adds `coeff * value` to `expr`.
    fn add_to(&self, expr: &mut LinearExpr, coeff: i64) -> Result<()> {
        match self {
            IntEncoding::Direct(v) => {
                expr.add_term(*v, coeff);
            }
            IntEncoding::Quantized { lower, bits } => {
                let constant = coeff.checked_mul(*lower).ok_or_else(|| {
                    Error::Overflow("substituting a quantized lower bound".into())
                })?;
                expr.add_constant(constant);
                for (q, b) in bits.iter().enumerate() {
                    let weight = 1i64
                        .checked_shl(q as u32)
                        .filter(|_| q < 62)
                        .and_then(|p| p.checked_mul(coeff))
                        .ok_or_else(|| Error::Overflow(format!("scaling bit {q}")))?;
                    expr.add_term(*b, weight);
                }
            }
        }
        Ok(())
    }
}

/// Where each classifier quantity lives in an encoded model.
#[derive(Debug, Clone)]
pub struct EncodingLayout {
    pub feature_count: usize,
    pub class_count: usize,
    pub labels: Vec<usize>,
    /// `[f][c]`
    pub w_plus: Vec<Vec<VarId>>,
    /// `[f][c]`
    pub w_minus: Vec<Vec<VarId>>,
    pub bias: Vec<IntEncoding>,
    /// `[c][i]`
    pub score: Vec<Vec<IntEncoding>>,
    pub e_plus: Vec<IntEncoding>,
    pub e_minus: Vec<IntEncoding>,
}

impl EncodingLayout {
    pub fn weight_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.w_plus
            .iter()
            .zip(&self.w_minus)
            .flat_map(|(p, m)| p.iter().zip(m).flat_map(|(&a, &b)| [a, b]))
    }

    pub fn bias_vars(&self) -> Vec<VarId> {
        self.bias
            .iter()
            .filter_map(|e| match e {
                IntEncoding::Direct(v) => Some(*v),
                IntEncoding::Quantized { .. } => None,
            })
            .collect()
    }
}

/// Weights in {-1, 0, 1} and integer biases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainedModel {
    #[serde(rename = "F_size")]
    pub feature_count: usize,
    #[serde(rename = "C_size")]
    pub class_count: usize,
    /// `[f][c]`
    #[serde(rename = "W")]
    pub weights: Vec<Vec<i8>>,
    #[serde(rename = "b")]
    pub bias: Vec<i64>,
}

impl TrainedModel {
    pub fn zeros(feature_count: usize, class_count: usize) -> Self {
        Self {
            feature_count,
            class_count,
            weights: vec![vec![0; class_count]; feature_count],
            bias: vec![0; class_count],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.feature_count {
            return Err(Error::Dimension {
                expected: self.feature_count,
                got: self.weights.len(),
            });
        }
        if self.bias.len() != self.class_count {
            return Err(Error::Dimension {
                expected: self.class_count,
                got: self.bias.len(),
            });
        }
        for row in &self.weights {
            if row.len() != self.class_count {
                return Err(Error::Dimension {
                    expected: self.class_count,
                    got: row.len(),
                });
            }
            if let Some(w) = row.iter().find(|w| !(-1..=1).contains(*w)) {
                return Err(Error::ModelFile(format!("weight {w} outside {{-1, 0, 1}}")));
            }
        }
        Ok(())
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weights.iter().flatten().filter(|&&w| w != 0).count()
    }
}

fn check_trainable(train: &BinaryDataset) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Dataset("training set is empty".into()));
    }
    if train.class_count() < 2 {
        return Err(Error::Dataset(
            "need at least 2 classes; with one class the margin reward is unbounded".into(),
        ));
    }
    Ok(())
}

/// Allocates an integer quantity either as one bounded integer variable or as
/// quantization bits with the upper-bound constraint.
fn alloc_int(
    model: &mut ModelIR,
    name: String,
    scheme: QuantizationScheme,
    quantize: bool,
) -> Result<IntEncoding> {
    if !quantize {
        let v = model.add_variable(name, Domain::Integer, scheme.lower, scheme.upper)?;
        return Ok(IntEncoding::Direct(v));
    }
    if scheme.bits > 62 {
        return Err(Error::Overflow(format!(
            "{name} needs {} bits",
            scheme.bits
        )));
    }
    let bits = (1..=scheme.bits)
        .map(|q| model.add_binary(format!("{name}_q{q}")))
        .collect::<Result<Vec<_>>>()?;
    let enc = IntEncoding::Quantized {
        lower: scheme.lower,
        bits,
    };
    if scheme.bits > 0 {
        let mut expr = LinearExpr::new();
        enc.add_to(&mut expr, 1)?;
        model.add_constraint(expr, Sense::Le, scheme.upper, format!("ub_{name}"))?;
    }
    Ok(enc)
}

fn build(
    train: &BinaryDataset,
    hp: &Hyperparams,
    bounds: &BoundsPolicy,
    quantize: bool,
) -> Result<(ModelIR, EncodingLayout)> {
    check_trainable(train)?;
    let (size_cost, alpha, beta) = hp.scaled()?;
    let nf = train.feature_count();
    let nc = train.class_count();
    let ni = train.len();
    let mut model = ModelIR::new();

    let mut w_plus = Vec::with_capacity(nf);
    let mut w_minus = Vec::with_capacity(nf);
    for f in 0..nf {
        let mut plus = Vec::with_capacity(nc);
        let mut minus = Vec::with_capacity(nc);
        for c in 0..nc {
            plus.push(model.add_binary(format!("w+_{f}_{c}"))?);
            minus.push(model.add_binary(format!("w-_{f}_{c}"))?);
        }
        w_plus.push(plus);
        w_minus.push(minus);
    }
    let bias = (0..nc)
        .map(|c| alloc_int(&mut model, format!("b_{c}"), bounds.bias, quantize))
        .collect::<Result<Vec<_>>>()?;
    let score = (0..nc)
        .map(|c| {
            (0..ni)
                .map(|i| alloc_int(&mut model, format!("y_{c}_{i}"), bounds.score, quantize))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let e_plus = (0..ni)
        .map(|i| alloc_int(&mut model, format!("ep_{i}"), bounds.margin, quantize))
        .collect::<Result<Vec<_>>>()?;
    let e_minus = (0..ni)
        .map(|i| alloc_int(&mut model, format!("em_{i}"), bounds.margin, quantize))
        .collect::<Result<Vec<_>>>()?;

    // A weight cannot be both positive and negative.
    for f in 0..nf {
        for c in 0..nc {
            let expr = LinearExpr::new()
                .with_term(w_plus[f][c], 1)
                .with_term(w_minus[f][c], 1);
            model.add_constraint(expr, Sense::Le, 1, format!("sign_{f}_{c}"))?;
        }
    }

    // Class scores: sum_f (w+ - w-) x + b - y = 0.
    for c in 0..nc {
        for (i, inst) in train.instances().iter().enumerate() {
            let mut expr = LinearExpr::new();
            for f in (0..nf).filter(|&f| inst.x[f]) {
                expr.add_term(w_plus[f][c], 1);
                expr.add_term(w_minus[f][c], -1);
            }
            bias[c].add_to(&mut expr, 1)?;
            score[c][i].add_to(&mut expr, -1)?;
            model.add_constraint(expr, Sense::Eq, 0, format!("score_{c}_{i}"))?;
        }
    }

    // Margins: y[l][i] - y[c][i] - e+ + e- >= 0.
    for (i, inst) in train.instances().iter().enumerate() {
        let l = inst.label;
        for c in (0..nc).filter(|&c| c != l) {
            let mut expr = LinearExpr::new();
            score[l][i].add_to(&mut expr, 1)?;
            score[c][i].add_to(&mut expr, -1)?;
            e_plus[i].add_to(&mut expr, -1)?;
            e_minus[i].add_to(&mut expr, 1)?;
            model.add_constraint(expr, Sense::Ge, 0, format!("margin_{i}_{c}"))?;
        }
    }

    let mut objective = LinearExpr::new();
    for v in w_plus.iter().chain(&w_minus).flatten() {
        objective.add_term(*v, size_cost);
    }
    for i in 0..ni {
        e_plus[i].add_to(&mut objective, -alpha)?;
        e_minus[i].add_to(&mut objective, beta)?;
    }
    model.set_objective(objective)?;

    let layout = EncodingLayout {
        feature_count: nf,
        class_count: nc,
        labels: train.labels().collect(),
        w_plus,
        w_minus,
        bias,
        score,
        e_plus,
        e_minus,
    };
    Ok((model, layout))
}

/// The mixed-integer program with [`default_bounds`].
pub fn build_mip(train: &BinaryDataset, hp: &Hyperparams) -> Result<(ModelIR, EncodingLayout)> {
    build(train, hp, &default_bounds(train), false)
}

pub fn build_mip_with_bounds(
    train: &BinaryDataset,
    hp: &Hyperparams,
    bounds: &BoundsPolicy,
) -> Result<(ModelIR, EncodingLayout)> {
    build(train, hp, bounds, false)
}

/// The pseudo-Boolean program: only binary variables.
pub fn build_pbo(
    train: &BinaryDataset,
    hp: &Hyperparams,
    bounds: &BoundsPolicy,
) -> Result<(ModelIR, EncodingLayout)> {
    build(train, hp, bounds, true)
}

/// Reads the classifier out of a feasible assignment of `model`.
pub fn decode_solution(
    layout: &EncodingLayout,
    model: &ModelIR,
    assignment: &HashMap<VarId, i64>,
) -> Result<TrainedModel> {
    let eval = model.evaluate(assignment)?;
    if !eval.feasible {
        return Err(Error::Infeasible(eval.violated.len()));
    }
    let values: Vec<i64> = (0..model.num_vars())
        .map(|v| assignment[&VarId(v)])
        .collect();
    Ok(decode_values(layout, &values))
}

/// Decodes without feasibility checks; `values` is indexed by `VarId`.
pub fn decode_values(layout: &EncodingLayout, values: &[i64]) -> TrainedModel {
    let weights = layout
        .w_plus
        .iter()
        .zip(&layout.w_minus)
        .map(|(plus, minus)| {
            plus.iter()
                .zip(minus)
                .map(|(p, m)| (values[p.0] - values[m.0]) as i8)
                .collect()
        })
        .collect();
    TrainedModel {
        feature_count: layout.feature_count,
        class_count: layout.class_count,
        weights,
        bias: layout.bias.iter().map(|b| b.value(values)).collect(),
    }
}

/// Per-instance `e+ - e-` read from an assignment.
pub fn margin_slacks(layout: &EncodingLayout, values: &[i64]) -> Vec<(i64, i64)> {
    layout
        .e_plus
        .iter()
        .zip(&layout.e_minus)
        .map(|(p, m)| (p.value(values), m.value(values)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BinaryDataset;

    fn toy() -> BinaryDataset {
        BinaryDataset::from_rows(&[(&[1, 0], 0), (&[0, 1], 1), (&[1, 1], 1)], 2).unwrap()
    }

    #[test]
    fn toy_counts() {
        let ds = toy();
        let hp = Hyperparams::from_integers(1, 2).unwrap();
        let (m, layout) = build_mip(&ds, &hp).unwrap();
        // independent count: 2FC w, C b, CI y, 2I e
        let (f, c, i) = (2, 2, 3);
        assert_eq!(m.num_vars(), 2 * f * c + c + c * i + 2 * i);
        assert_eq!(m.num_vars(), 22);
        assert_eq!(m.num_constraints(), f * c + c * i + i * (c - 1));
        assert_eq!(m.num_constraints(), 13);
        assert_eq!(layout.weight_vars().count(), 8);
        assert_eq!(m.variables().iter().filter(|v| v.is_binary()).count(), 8);
    }

    #[test]
    fn mnist_shape_weight_count() {
        let rows: Vec<(Vec<u8>, usize)> = (0..20)
            .map(|i| (vec![(i % 2) as u8; 784], i % 10))
            .collect();
        let refs: Vec<(&[u8], usize)> = rows.iter().map(|(x, l)| (x.as_slice(), *l)).collect();
        let ds = BinaryDataset::from_rows(&refs, 10).unwrap();
        let (m, _) = build_mip(&ds, &Hyperparams::from_integers(5, 10).unwrap()).unwrap();
        assert_eq!(
            m.variables().iter().filter(|v| v.is_binary()).count(),
            15680
        );
    }

    #[test]
    fn empty_training_set_rejected() {
        let ds = BinaryDataset::new(vec![], 3, 2).unwrap();
        assert!(build_mip(&ds, &Hyperparams::from_integers(1, 2).unwrap()).is_err());
    }

    #[test]
    fn hyperparams_validation_and_scaling() {
        assert!(Hyperparams::from_integers(0, 1).is_err());
        let hp = Hyperparams::with_default_beta(Rational::new(3, 2)).unwrap();
        assert_eq!(hp.beta, Rational::from_integer(3));
        assert_eq!(hp.scaled().unwrap(), (2, 3, 6));
        let hp = Hyperparams::new(Rational::new(1, 3), Rational::new(1, 2)).unwrap();
        assert_eq!(hp.scaled().unwrap(), (6, 2, 3));
    }

    #[test]
    fn quantization_bits() {
        assert_eq!(QuantizationScheme::new(-4, 4).unwrap().bits, 4);
        assert_eq!(QuantizationScheme::new(0, 0).unwrap().bits, 0);
        assert_eq!(QuantizationScheme::new(-43, 43).unwrap().bits, 7);
        assert_eq!(QuantizationScheme::new(0, 1).unwrap().bits, 1);
        assert_eq!(QuantizationScheme::new(0, 7).unwrap().bits, 3);
        assert_eq!(QuantizationScheme::new(0, 8).unwrap().bits, 4);
        assert!(QuantizationScheme::new(1, 0).is_err());
    }

    #[test]
    fn flags_bias_bounds() {
        let rows: Vec<(Vec<u8>, usize)> = (0..5).map(|i| (vec![1; 43], i)).collect();
        let refs: Vec<(&[u8], usize)> = rows.iter().map(|(x, l)| (x.as_slice(), *l)).collect();
        let ds = BinaryDataset::from_rows(&refs, 5).unwrap();
        let b = default_bounds(&ds).bias;
        assert_eq!((b.lower, b.upper, b.bits), (-43, 43, 7));
    }

    #[test]
    fn pbo_is_all_binary_with_expected_count() {
        let ds = toy();
        let bounds = default_bounds(&ds);
        let (m, _) = build_pbo(&ds, &Hyperparams::from_integers(1, 2).unwrap(), &bounds).unwrap();
        assert!(m.all_binary());
        // b: 2 vars * 3 bits, y: 6 * 4, e: 6 * 4
        let quantized: u32 = 2 * bounds.bias.bits + 6 * bounds.score.bits + 6 * bounds.margin.bits;
        assert_eq!(quantized, 54);
        assert_eq!(m.num_vars(), 8 + quantized as usize);
        // 13 original rows + one upper-bound row per quantized variable
        assert_eq!(m.num_constraints(), 13 + 14);
    }

    #[test]
    fn degenerate_range_adds_no_bits() {
        let ds = toy();
        let zero = QuantizationScheme::new(0, 0).unwrap();
        let bounds = BoundsPolicy {
            bias: zero,
            ..default_bounds(&ds)
        };
        let (m, layout) =
            build_pbo(&ds, &Hyperparams::from_integers(1, 2).unwrap(), &bounds).unwrap();
        assert!(m.var_by_name("b_0_q1").is_none());
        assert_eq!(
            layout.bias[0],
            IntEncoding::Quantized {
                lower: 0,
                bits: vec![]
            }
        );
    }

    #[test]
    fn quantized_value_formula() {
        let enc = IntEncoding::Quantized {
            lower: -4,
            bits: vec![VarId(0), VarId(1), VarId(2), VarId(3)],
        };
        assert_eq!(enc.value(&[0, 1, 0, 1]), 6);
        assert_eq!(enc.value(&[0, 0, 0, 0]), -4);
    }

    #[test]
    fn decode_weights() {
        let ds = toy();
        let (m, layout) = build_mip(&ds, &Hyperparams::from_integers(1, 2).unwrap()).unwrap();
        let mut values = m.lower_bounds();
        // W[0][1] = +1 and scores consistent; leave the rest at a feasible point
        values.iter_mut().for_each(|v| *v = 0);
        values[layout.w_plus[0][1].0] = 1;
        for (i, inst) in ds.instances().iter().enumerate() {
            if let IntEncoding::Direct(v) = layout.score[1][i] {
                values[v.0] = i64::from(inst.x[0]);
            }
        }
        // e- large enough to cover every negative margin
        for e in &layout.e_minus {
            if let IntEncoding::Direct(v) = e {
                values[v.0] = 1;
            }
        }
        let assignment: HashMap<VarId, i64> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (VarId(i), v))
            .collect();
        let model = decode_solution(&layout, &m, &assignment).unwrap();
        assert_eq!(model.weights[0][1], 1);
        assert_eq!(model.weights[1][0], 0);

        let mut bad = assignment.clone();
        bad.insert(layout.w_minus[0][1], 1);
        assert!(matches!(
            decode_solution(&layout, &m, &bad),
            Err(Error::Infeasible(_))
        ));
    }
}
