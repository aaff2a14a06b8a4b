use crate::frameio::{Frame, LumaPlane};

/// Saturation-histogram resolution.
pub const SATURATION_BINS: usize = 256;

/// Default smoke threshold on HSV saturation.
pub const SMOKE_TC: f64 = 0.35;

/// HSV saturation of one pixel, in [0, 1].
#[inline]
pub fn saturation([r, g, b]: [u8; 3]) -> f64 {
    let max = r.max(g).max(b);
    if max == 0 {
        0.0
    } else {
        f64::from(max - r.min(g).min(b)) / f64::from(max)
    }
}

/// Normalized saturation histogram (bins sum to one).
pub fn saturation_histogram(frame: &Frame, nbins: usize) -> Vec<f64> {
    let mut hist = vec![0.0; nbins];
    for p in frame.pixels() {
        let b = (saturation(p) * nbins as f64) as usize;
        hist[b.min(nbins - 1)] += 1.0;
    }
    let n = (frame.width() * frame.height()) as f64;
    for h in &mut hist {
        *h /= n;
    }
    hist
}

/// Smoke / no-smoke probabilities: the histogram mass whose bin centres lie
/// at or below `tc`, i.e. the fraction of weakly saturated pixels.
pub fn smoke_probability(frame: &Frame, tc: f64, nbins: usize) -> (f64, f64) {
    let hist = saturation_histogram(frame, nbins);
    let p_s: f64 = hist
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as f64 + 0.5) / nbins as f64 <= tc)
        .map(|(_, b)| b)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    (p_s, 1.0 - p_s)
}

/// Fast noise standard deviation estimate from the 3×3 mask
/// `[[1,-2,1],[-2,4,-2],[1,-2,1]]` over interior pixels.
pub fn noise_sigma(luma: &LumaPlane) -> f64 {
    let (w, h) = luma.dims();
    let v = luma.values();
    let mut sum = 0.0;
    for y in 1..h - 1 {
        let (up, mid, dn) = (&v[(y - 1) * w..y * w], &v[y * w..(y + 1) * w], &v[(y + 1) * w..(y + 2) * w]);
        for x in 1..w - 1 {
            let r = up[x - 1] - 2.0 * up[x] + up[x + 1] - 2.0 * mid[x - 1] + 4.0 * mid[x] - 2.0 * mid[x + 1]
                + dn[x - 1]
                - 2.0 * dn[x]
                + dn[x + 1];
            sum += r.abs();
        }
    }
    (std::f64::consts::FRAC_PI_2).sqrt() * sum / (6.0 * (w - 2) as f64 * (h - 2) as f64)
}

/// Value returned by [`lmr`] for a plane with zero luminance range.
pub const LMR_UNDEFINED: f64 = f64::INFINITY;

/// Mean luminance over luminance range.
pub fn lmr(luma: &LumaPlane) -> f64 {
    let v = luma.values();
    let (min, max) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = max - min;
    if range <= 0.0 {
        LMR_UNDEFINED
    } else {
        luma.mean() / range
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn gray_and_red_frames() {
        let gray = Frame::filled(8, 8, [90, 90, 90]).unwrap();
        assert_eq!(smoke_probability(&gray, SMOKE_TC, SATURATION_BINS), (1.0, 0.0));
        let red = Frame::filled(8, 8, [255, 0, 0]).unwrap();
        assert_eq!(smoke_probability(&red, SMOKE_TC, SATURATION_BINS), (0.0, 1.0));
        let black = Frame::filled(8, 8, [0, 0, 0]).unwrap();
        assert_eq!(smoke_probability(&black, SMOKE_TC, SATURATION_BINS).0, 1.0);
    }

    #[test]
    fn noise_mask_kills_planes() {
        let c = LumaPlane::new(10, 8, vec![77.0; 80]).unwrap();
        assert_eq!(noise_sigma(&c), 0.0);
        let ramp = LumaPlane::from_fn(20, 12, |x, y| 3.0 * x as f64 + 5.0 * y as f64 + 1.0).unwrap();
        assert!(noise_sigma(&ramp).abs() < 1e-12);
    }

    #[test]
    fn noise_estimate_on_awgn() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = Normal::new(0.0, 5.0).unwrap();
        let p = LumaPlane::from_fn(512, 512, |_, _| 128.0 + n.sample(&mut rng)).unwrap();
        let s = noise_sigma(&p);
        assert!((s - 5.0).abs() < 0.5, "{s}");
    }

    #[test]
    fn lmr_cases() {
        let half = LumaPlane::from_fn(10, 10, |x, _| if x < 5 { 0.0 } else { 255.0 }).unwrap();
        assert!((lmr(&half) - 0.5).abs() < 1e-15);
        let c = LumaPlane::new(4, 4, vec![12.0; 16]).unwrap();
        assert_eq!(lmr(&c), LMR_UNDEFINED);
    }

    proptest! {
        #[test]
        fn smoke_probabilities_complement_and_monotone(
            px in proptest::collection::vec(any::<[u8; 3]>(), 9),
            t1 in 0.0f64..1.0, t2 in 0.0f64..1.0,
        ) {
            let frame = Frame::new(3, 3, px.concat()).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let (ps_lo, pns_lo) = smoke_probability(&frame, lo, 64);
            let (ps_hi, _) = smoke_probability(&frame, hi, 64);
            prop_assert!((ps_lo + pns_lo - 1.0).abs() < 1e-12);
            prop_assert!(ps_lo <= ps_hi + 1e-12);
        }

        #[test]
        fn lmr_positive_and_permutation_invariant(
            vals in proptest::collection::vec(1.0f64..255.0, 16),
            rot in 0usize..16,
        ) {
            let p = LumaPlane::new(4, 4, vals.clone()).unwrap();
            let mut rotated = vals.clone();
            rotated.rotate_left(rot);
            let q = LumaPlane::new(4, 4, rotated).unwrap();
            let (a, b) = (lmr(&p), lmr(&q));
            prop_assert!(a > 0.0);
            prop_assert!(a == b || (a - b).abs() < 1e-12 * a.abs());
        }
    }
}
