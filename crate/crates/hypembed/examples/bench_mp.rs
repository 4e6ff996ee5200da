use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use std::time::Instant;

fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() { return 0.0; }
    if x.is_nan() { return f64::NAN; }
    if x.is_inf_pos() { return f64::INFINITY; }
    if x.is_inf_neg() { return f64::NEG_INFINITY; }
    let (words, _n, s, e, _) = x.as_raw_parts().unwrap();
    let top = *words.last().unwrap() as f64; // MSW, top bit set
    let lo = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
    let m = top + lo / 18446744073709551616.0;
    let v = m * 2f64.powi(e - 64);
    if s == Sign::Neg { -v } else { v }
}

fn main() {
    let rm = RoundingMode::ToEven;
    let mut cc = Consts::new().unwrap();
    for &p in &[128usize, 512, 1024] {
        let a = BigFloat::from_f64(1.234567890123, p);
        let b = BigFloat::from_f64(0.987654321098, p);
        let t0 = Instant::now();
        let n = 300_000u32;
        let mut acc = BigFloat::from_f64(0.0, p);
        for _ in 0..n {
            let c = a.mul(&b, p, rm);
            acc = acc.add(&c, p, rm);
        }
        let per = t0.elapsed() / (2 * n);
        let m = 3_000u32;
        let x = BigFloat::from_f64(20.5, p);
        let t1 = Instant::now();
        let mut s = BigFloat::from_f64(0.0, p);
        for _ in 0..m {
            let c = x.cosh(p, rm, &mut cc);
            s = s.add(&c, p, rm);
        }
        let per_cosh = t1.elapsed() / m;
        let y = BigFloat::from_f64(1.0000000001e10, p);
        let t2 = Instant::now();
        for _ in 0..m {
            let c = y.acosh(p, rm, &mut cc);
            s = s.add(&c, p, rm);
        }
        let per_acosh = t2.elapsed() / m;
        let t3 = Instant::now();
        for _ in 0..m {
            let c = y.sqrt(p, rm);
            s = s.add(&c, p, rm);
        }
        let per_sqrt = t3.elapsed() / m;
        println!("p={p}: mul/add {per:?}  cosh {per_cosh:?}  acosh {per_acosh:?}  sqrt {per_sqrt:?}  (acc={}, s={})", to_f64(&acc), to_f64(&s));
    }
}
