use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Volume;
use crate::error::{Error, Result};

/// `10 log10(||M||^2 / ||M - Y||^2)`. Identical volumes give `+inf`.
pub fn snr_db(clean: &Volume, test: &Volume) -> Result<f64> {
    if clean.dims() != test.dims() {
        return Err(Error::InvalidInput(format!(
            "volume dimensions differ: {:?} vs {:?}",
            clean.dims(),
            test.dims()
        )));
    }
    let err: f64 = clean
        .as_slice()
        .iter()
        .zip(test.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (clean.energy() / err).log10())
}

/// Adds i.i.d. Gaussian noise to `clean` so that `snr_db(clean, noisy)`
/// equals `target_snr_db`.
///
/// The draw uses the analytic level `sigma = ||M|| / sqrt(N 10^(snr/10))`
/// and is then rescaled by the ratio of target to realized noise norm, so
/// the realized SNR hits the target up to rounding. `+inf` returns a copy.
pub fn add_noise(clean: &Volume, target_snr_db: f64, seed: u64) -> Result<Volume> {
    if target_snr_db.is_nan() {
        return Err(Error::InvalidInput("target SNR is NaN".into()));
    }
    let energy = clean.energy();
    if energy == 0.0 {
        return Err(Error::InvalidInput(
            "cannot set an SNR on an all-zero volume".into(),
        ));
    }
    if target_snr_db == f64::INFINITY {
        return Ok(clean.clone());
    }
    let target_noise = energy / 10f64.powf(target_snr_db / 10.0);
    let sigma = (target_noise / clean.len() as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..clean.len())
        .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect::<Vec<f64>>();
    let drawn: f64 = noise.iter().map(|v| v * v).sum();
    let rescale = (target_noise / drawn).sqrt();
    let mut out = clean.clone();
    for (v, e) in out.as_mut_slice().iter_mut().zip(&noise) {
        *v += rescale * e;
    }
    Ok(out)
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, &mut upper, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Robust noise level: median absolute deviation of first differences
/// along axis 1 (scaled by `1/sqrt(2)`), converted to a Gaussian standard
/// deviation.
pub fn estimate_noise_sigma(v: &Volume) -> f64 {
    let [n1, n2, n3] = v.dims();
    if n1 < 2 {
        return 0.0;
    }
    let mut diffs = Vec::with_capacity((n1 - 1) * n2 * n3);
    for i3 in 0..n3 {
        for i2 in 0..n2 {
            let t = v.trace(i2, i3);
            diffs.extend(
                t.windows(2)
                    .map(|w| (w[1] - w[0]) / std::f64::consts::SQRT_2),
            );
        }
    }
    let center = median(&mut diffs);
    let mut dev: Vec<f64> = diffs.iter().map(|d| (d - center).abs()).collect();
    median(&mut dev) / 0.674_489_750_196_081_7
}
