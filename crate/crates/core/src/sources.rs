//! Reference sources used throughout the experiments.

use crate::markov::GeneratorMatrix;

/// Five homogeneous states, every off-diagonal rate 0.25.
pub fn q1() -> GeneratorMatrix {
    let n = 5;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { -1.0 } else { 0.25 }).collect())
        .collect();
    GeneratorMatrix::new(&rows).expect("q1 is a valid generator")
}

/// Three heterogeneous states.
///
/// The third row is `[0.1, 0.7, -0.8]`; the sign of its last two entries is
/// the only arrangement of these magnitudes that yields a generator.
pub fn q2() -> GeneratorMatrix {
    GeneratorMatrix::new(&[[-1.0, 0.7, 0.3], [0.2, -0.6, 0.4], [0.1, 0.7, -0.8]])
        .expect("q2 is a valid generator")
}

/// Two states: slow state 1 (σ = 0.5) and fast state 2 (σ = 0.75).
pub fn q3() -> GeneratorMatrix {
    GeneratorMatrix::new(&[[-0.5, 0.5], [0.75, -0.75]]).expect("q3 is a valid generator")
}

/// Looks up a reference source by name (`q1`, `q2`, `q3`, case-insensitive).
pub fn by_name(name: &str) -> Option<GeneratorMatrix> {
    match name.to_ascii_lowercase().as_str() {
        "q1" => Some(q1()),
        "q2" => Some(q2()),
        "q3" => Some(q3()),
        _ => None,
    }
}

pub fn all() -> Vec<(&'static str, GeneratorMatrix)> {
    vec![("q1", q1()), ("q2", q2()), ("q3", q3())]
}
