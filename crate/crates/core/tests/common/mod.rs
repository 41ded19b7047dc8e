//! Oracles shared by several test targets.
#![allow(dead_code)]

fn fact(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Racah's closed form on doubled arguments, straight from the textbook
/// expression; factorials stay below 2^53 for j ≤ 5.
pub fn racah_oracle(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
    if tm1 + tm2 != tm || tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 + tj) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i32| x / 2;
    let (j1p, j1m) = (h(tj1 + tm1), h(tj1 - tm1));
    let (j2p, j2m) = (h(tj2 + tm2), h(tj2 - tm2));
    let (jp, jm) = (h(tj + tm), h(tj - tm));
    let a = h(tj1 + tj2 - tj);
    let b = h(tj1 - tj2 + tj);
    let c = h(-tj1 + tj2 + tj);
    let total = h(tj1 + tj2 + tj) + 1;

    let pre = (f64::from(tj + 1) * fact(a) * fact(b) * fact(c) / fact(total)).sqrt()
        * (fact(jp) * fact(jm) * fact(j1m) * fact(j1p) * fact(j2m) * fact(j2p)).sqrt();
    let mut sum = 0.0;
    for k in 0..=total {
        let d = [
            k,
            a - k,
            j1m - k,
            j2p - k,
            h(tj - tj2 + tm1) + k,
            h(tj - tj1 - tm2) + k,
        ];
        if d.iter().any(|&x| x < 0) {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / d.iter().map(|&x| fact(x)).product::<f64>();
    }
    pre * sum
}

/// Doubled projections -tj, -tj+2, ..., tj.
pub fn projections(tj: i32) -> impl Iterator<Item = i32> {
    (-tj..=tj).step_by(2)
}
