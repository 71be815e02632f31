//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, tol / 2.0, depth - 1) + recurse(f, mid, b, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(f, a, b, tol, 40)
}

/// `P(F > f)` by numerically integrating the F density, with the
/// normalizing constant also obtained by quadrature (no gamma or beta
/// functions involved).
///
/// The density `x^(d1/2-1) (1 + d1 x / d2)^(-(d1+d2)/2)` is split at 1:
/// `x = u²` on `[0, 1]` removes the endpoint singularity for `d1 = 1`, and
/// `x = 1/v` maps the infinite tail onto `(0, 1]`.
pub fn f_tail_by_quadrature(f: f64, d1: f64, d2: f64) -> f64 {
    let near =
        move |u: f64| 2.0 * u.powf(d1 - 1.0) * (1.0 + d1 * u * u / d2).powf(-(d1 + d2) / 2.0);
    let far = move |v: f64| {
        if v == 0.0 {
            return if d2 > 2.0 {
                0.0
            } else {
                (d1 / d2).powf(-(d1 + d2) / 2.0)
            };
        }
        v.powf(d2 / 2.0 - 1.0) * (v + d1 / d2).powf(-(d1 + d2) / 2.0)
    };
    let tol = 1e-14;
    let near_total = integrate(&near, 0.0, 1.0, tol);
    let far_total = integrate(&far, 0.0, 1.0, tol);
    let tail = if f <= 1.0 {
        integrate(&near, f.sqrt(), 1.0, tol) + far_total
    } else {
        integrate(&far, 0.0, 1.0 / f, tol)
    };
    tail / (near_total + far_total)
}

/// Unit cells `[i, i+1) x [j, j+1)` inside both integer-coordinate boxes.
pub fn shared_cells(a: (i64, i64, i64, i64), b: (i64, i64, i64, i64)) -> u64 {
    let mut count = 0;
    for x in a.0..a.2 {
        for y in a.1..a.3 {
            if x >= b.0 && x < b.2 && y >= b.1 && y < b.3 {
                count += 1;
            }
        }
    }
    count
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Pooled two-sample t statistic.
pub fn pooled_t(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let sp2 = ((n1 - 1.0) * sample_var(a) + (n2 - 1.0) * sample_var(b)) / (n1 + n2 - 2.0);
    (mean(a) - mean(b)) / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt()
}
