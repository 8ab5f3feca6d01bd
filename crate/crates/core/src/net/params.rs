use super::NetConfig;

/// `(groups, in_per_group, out_per_group, kernel)` for every layer, in reals.
pub(crate) fn layer_shapes(c: &NetConfig) -> Vec<(usize, usize, usize, (usize, usize))> {
    let (l, r2) = (c.layers as usize, c.r * c.r);
    let mut v = vec![(1, 4, 16 * r2, c.omega)];
    for ell in 1..l {
        v.push((1 << (2 * ell), 4 * r2, 16 * r2, (2, 2)));
    }
    v.push((1 << (2 * l), 4 * r2, 4 * c.m.0 * c.m.1, (1, 1)));
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCount {
    pub name: String,
    /// Stored (structurally nonzero) weights.
    pub weights: u128,
    pub biases: u128,
    /// Closed-form counts for the same layer.
    pub formula_weights: u128,
    pub formula_biases: u128,
    /// Weights if every channel of the layer were connected to every other.
    pub dense_weights: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamReport {
    pub layers: Vec<LayerCount>,
    pub total: u128,
    /// `16 r^2 (1 + 4 wx wy) + (4^(L+2) - 64)/3 r^2 (1 + 16 r^2) + 4^(L+1) mx my (1 + 4 r^2)`.
    pub formula_total: u128,
    /// Recursion-layer weight sum `(4^(L+4) - 4^5) r^4 / 3`.
    pub formula_recursion_weights: u128,
    /// Recursion-layer bias sum `(4^(L+2) - 4^3) r^2 / 3`.
    pub formula_recursion_biases: u128,
    /// Structural count of the fully connected variant, biases included.
    pub dense_total: u128,
    /// The published fully connected total,
    /// `16 r^2 (1 + 4 wx wy) + (4^(L+2) - 64)/3 + (4^(2L+8) - 4^6)/15 + 4^(L+1) mx my (1 + 4 r^2)`.
    pub formula_dense_total: u128,
}

impl ParamReport {
    pub fn dense_ratio(&self) -> f64 {
        self.dense_total as f64 / self.total as f64
    }
}

fn p4(e: u32) -> u128 {
    1u128 << (2 * e)
}

/// Parameter counts from the layer shapes, next to their closed forms.
pub fn param_count(c: &NetConfig) -> ParamReport {
    let l = c.layers;
    let r2 = (c.r * c.r) as u128;
    let (wx, wy) = (c.omega.0 as u128, c.omega.1 as u128);
    let mm = (c.m.0 * c.m.1) as u128;
    let shapes = layer_shapes(c);
    let mut layers = Vec::with_capacity(shapes.len());
    for (idx, &(g, ci, co, (kh, kw))) in shapes.iter().enumerate() {
        let (g, ci, co, k) = (g as u128, ci as u128, co as u128, (kh * kw) as u128);
        let ell = idx as u32;
        let (name, fw, fb) = if idx == 0 {
            ("interpolation".to_string(), p4(3) * r2 * wx * wy, p4(2) * r2)
        } else if ell < l {
            (format!("recursion {ell}"), p4(ell + 4) * r2 * r2, p4(ell + 2) * r2)
        } else {
            ("kernel".to_string(), p4(l + 2) * r2 * mm, p4(l + 1) * mm)
        };
        layers.push(LayerCount {
            name,
            weights: g * k * co * ci,
            biases: g * co,
            formula_weights: fw,
            formula_biases: fb,
            dense_weights: k * (g * co) * (g * ci),
        });
    }
    let total = layers.iter().map(|x| x.weights + x.biases).sum();
    let dense_total = layers.iter().map(|x| x.dense_weights + x.biases).sum();
    let lp = p4(l + 2) - p4(3);
    ParamReport {
        total,
        formula_total: p4(2) * r2 * (1 + 4 * wx * wy) + lp / 3 * r2 * (1 + 16 * r2) + p4(l + 1) * mm * (1 + 4 * r2),
        formula_recursion_weights: (p4(l + 4) - p4(5)) * r2 * r2 / 3,
        formula_recursion_biases: lp * r2 / 3,
        dense_total,
        formula_dense_total: p4(2) * r2 * (1 + 4 * wx * wy)
            + lp / 3
            + (p4(2 * l + 8) - p4(6)) / 15
            + p4(l + 1) * mm * (1 + 4 * r2),
        layers,
    }
}
