//! Q2 reference square, P1 modal pressure basis and tensor Gauss rules.

/// Reference coordinates of the nine Q2 nodes: corners counterclockwise, then
/// edge midpoints (bottom, right, top, left), then the center.
pub const Q2_NODES: [[f64; 2]; 9] = [
    [-1.0, -1.0],
    [1.0, -1.0],
    [1.0, 1.0],
    [-1.0, 1.0],
    [0.0, -1.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [-1.0, 0.0],
    [0.0, 0.0],
];

/// 1D Lagrange index (0 ↔ −1, 1 ↔ 0, 2 ↔ +1) of each node in ξ and η.
const LEX: [[usize; 2]; 9] = [
    [0, 0],
    [2, 0],
    [2, 2],
    [0, 2],
    [1, 0],
    [2, 1],
    [1, 2],
    [0, 1],
    [1, 1],
];

/// Local node ids of each edge: (start corner, end corner, midpoint).
pub const EDGE_NODES: [[usize; 3]; 4] = [[0, 1, 4], [1, 2, 5], [2, 3, 6], [3, 0, 7]];

fn lagrange_1d(s: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    (
        [0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)],
        [s - 0.5, -2.0 * s, s + 0.5],
        [1.0, -2.0, 1.0],
    )
}

pub fn q2_values(xi: f64, eta: f64) -> [f64; 9] {
    let (a, _, _) = lagrange_1d(xi);
    let (b, _, _) = lagrange_1d(eta);
    std::array::from_fn(|k| a[LEX[k][0]] * b[LEX[k][1]])
}

pub fn q2_gradients(xi: f64, eta: f64) -> [[f64; 2]; 9] {
    let (a, da, _) = lagrange_1d(xi);
    let (b, db, _) = lagrange_1d(eta);
    std::array::from_fn(|k| {
        let (i, j) = (LEX[k][0], LEX[k][1]);
        [da[i] * b[j], a[i] * db[j]]
    })
}

/// Second derivatives as (∂ξξ, ∂ξη, ∂ηη).
pub fn q2_hessians(xi: f64, eta: f64) -> [[f64; 3]; 9] {
    let (a, da, dda) = lagrange_1d(xi);
    let (b, db, ddb) = lagrange_1d(eta);
    std::array::from_fn(|k| {
        let (i, j) = (LEX[k][0], LEX[k][1]);
        [dda[i] * b[j], da[i] * db[j], a[i] * ddb[j]]
    })
}

/// Modal P1 pressure basis (1, ξ, η).
pub fn p1_values(xi: f64, eta: f64) -> [f64; 3] {
    [1.0, xi, eta]
}

/// 1D Gauss-Legendre points and weights on [−1, 1].
pub fn gauss_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (0.6f64).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        _ => panic!("unsupported Gauss order {n}"),
    }
}

/// Tensor-product Gauss rule on the reference square.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss(n: usize) -> Self {
        let (p, w) = gauss_1d(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push([p[i], p[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Reference basis tabulated at the points of a quadrature rule.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub rule: QuadratureRule,
    pub values: Vec<[f64; 9]>,
    pub grads: Vec<[[f64; 2]; 9]>,
    pub hessians: Vec<[[f64; 3]; 9]>,
    pub pressure: Vec<[f64; 3]>,
}

impl ReferenceElement {
    pub fn new(order: usize) -> Self {
        let rule = QuadratureRule::gauss(order);
        let values = rule.points.iter().map(|p| q2_values(p[0], p[1])).collect();
        let grads = rule.points.iter().map(|p| q2_gradients(p[0], p[1])).collect();
        let hessians = rule.points.iter().map(|p| q2_hessians(p[0], p[1])).collect();
        let pressure = rule.points.iter().map(|p| p1_values(p[0], p[1])).collect();
        Self {
            rule,
            values,
            grads,
            hessians,
            pressure,
        }
    }
}

/// Gauss points along a reference edge, as (reference point, 1D weight).
pub fn edge_rule(edge: usize, n: usize) -> Vec<([f64; 2], f64)> {
    let (p, w) = gauss_1d(n);
    let a = Q2_NODES[EDGE_NODES[edge][0]];
    let b = Q2_NODES[EDGE_NODES[edge][1]];
    p.iter()
        .zip(&w)
        .map(|(s, wi)| {
            let t = 0.5 * (s + 1.0);
            ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], *wi)
        })
        .collect()
}
