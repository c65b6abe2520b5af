//! Minimal scatter plots.

const W: f64 = 640.0;
const H: f64 = 480.0;
const M: f64 = 50.0;

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Scatter plot of `points` with one colour per series index.
pub fn scatter(points: &[(f64, f64, usize)], x_label: &str, y_label: &str) -> String {
    const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (y0, y1) = bounds(points.iter().map(|p| p.1));
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W - 2.0 * M,
        H - 2.0 * M
    );
    for &(x, y, k) in points {
        if x.is_finite() && y.is_finite() {
            s += &format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1\" fill=\"{}\"/>\n", sx(x), sy(y), COLOURS[k % COLOURS.len()]);
        }
    }
    s += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{x_label}</text>\n\
         <text x=\"15\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 15 {})\">{y_label}</text>\n\
         <text x=\"{M}\" y=\"{}\" font-size=\"11\">{x0:.4}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{x1:.4}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{y0:.4}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{y1:.4}</text>\n</svg>\n",
        W / 2.0,
        H - 10.0,
        H / 2.0,
        H / 2.0,
        H - M + 15.0,
        W - M,
        H - M + 15.0,
        M - 4.0,
        H - M,
        M - 4.0,
        M + 10.0
    );
    s
}
