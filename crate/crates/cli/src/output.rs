use std::io;

use plateau_core::SweepRow;

const SIG_DIGITS: usize = 12;

/// `%.12g`: fixed notation for exponents in `[-4, 12)`, scientific
/// otherwise, trailing zeros trimmed.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["d", "estimate", "std_error", "lower", "upper", "exact", "vacuous_upper"])?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            fmt_g(r.estimate),
            fmt_g(r.std_error),
            fmt_g(r.lower),
            fmt_g(r.upper),
            r.exact.map(fmt_g).unwrap_or_default(),
            r.vacuous_upper.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
