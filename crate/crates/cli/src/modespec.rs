//! Canonical text form of mode specifications.
//!
//! Grammar (waists come from the configuration's `w_0`):
//!
//! ```text
//! spec    := "gauss"
//!          | "lg:ell=<int>[,p=<uint>]"
//!          | "hg:n=<uint>,m=<uint>"
//!          | "vortex:ell=<int>"
//!          | "frac:m=<half-int>[,offset=<radians>]"
//!          | "sup:(<coeff>,<spec>)+(<coeff>,<spec>)+..."
//! coeff   := float | float"i" | float("+"|"-")float"i" | "i" | "-i"
//! ```

use num_complex::Complex64 as C64;
use teleportsim_core::modes::ModeSpec;
use teleportsim_core::Error;

type Result<T> = std::result::Result<T, Error>;

/// Parse a complex coefficient: `0.7`, `0.7i`, `1+2i`, `-0.5-0.5i`, `i`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty coefficient".into()));
    }
    let bad = || Error::Parse(format!("bad complex coefficient `{s}`"));
    if let Some(imag) = s.strip_suffix('i') {
        // purely imaginary or full complex form
        // find the split between real and imaginary parts: a sign that is not
        // the leading character and not part of an exponent
        let bytes = imag.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re: f64 = imag[..k].parse().map_err(|_| bad())?;
                let im_str = &imag[k..];
                let im: f64 = match im_str {
                    "+" => 1.0,
                    "-" => -1.0,
                    other => other.parse().map_err(|_| bad())?,
                };
                Ok(C64::new(re, im))
            }
            None => {
                let im: f64 = match imag {
                    "" => 1.0,
                    "-" => -1.0,
                    other => other.parse().map_err(|_| bad())?,
                };
                Ok(C64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = s.parse().map_err(|_| bad())?;
        Ok(C64::new(re, 0.0))
    }
}

fn parse_fields<'a>(body: &'a str, allowed: &[&str]) -> Result<Vec<(&'a str, &'a str)>> {
    body.split(',')
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in `{pair}`")))?;
            if !allowed.contains(&k) {
                return Err(Error::Parse(format!("unknown field `{k}`")));
            }
            Ok((k, v))
        })
        .collect()
}

fn field<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str) -> Result<Option<T>> {
    for (k, v) in fields {
        if *k == key {
            return v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse(format!("bad value `{v}` for `{key}`")));
        }
    }
    Ok(None)
}

/// Parse one mode spec, using `waist` for every leaf mode.
pub fn parse_mode(s: &str, waist: f64) -> Result<ModeSpec> {
    let s = s.trim();
    if s == "gauss" {
        return Ok(ModeSpec::Gauss { waist });
    }
    if let Some(body) = s.strip_prefix("lg:") {
        let f = parse_fields(body, &["ell", "p"])?;
        let ell: i32 = field(&f, "ell")?
            .ok_or_else(|| Error::Parse("lg needs ell".into()))?;
        let p: u32 = field(&f, "p")?.unwrap_or(0);
        return Ok(ModeSpec::Lg { ell, p, waist });
    }
    if let Some(body) = s.strip_prefix("hg:") {
        let f = parse_fields(body, &["n", "m"])?;
        let n: u32 = field(&f, "n")?.ok_or_else(|| Error::Parse("hg needs n".into()))?;
        let m: u32 = field(&f, "m")?.ok_or_else(|| Error::Parse("hg needs m".into()))?;
        return Ok(ModeSpec::Hg { n, m, waist });
    }
    if let Some(body) = s.strip_prefix("vortex:") {
        let f = parse_fields(body, &["ell"])?;
        let ell: i32 = field(&f, "ell")?
            .ok_or_else(|| Error::Parse("vortex needs ell".into()))?;
        return Ok(ModeSpec::PhaseVortex { ell, waist });
    }
    if let Some(body) = s.strip_prefix("frac:") {
        let f = parse_fields(body, &["m", "offset"])?;
        let m: f64 = field(&f, "m")?.ok_or_else(|| Error::Parse("frac needs m".into()))?;
        let twice = (2.0 * m).round();
        if (2.0 * m - twice).abs() > 1e-9 {
            return Err(Error::Parse(format!("charge {m} is not a half-integer")));
        }
        let offset: f64 = field(&f, "offset")?.unwrap_or(0.0);
        return Ok(ModeSpec::FracOam { twice_m: twice as i32, offset, waist });
    }
    if let Some(body) = s.strip_prefix("sup:") {
        let mut terms = Vec::new();
        for part in split_top_level(body)? {
            let inner = part
                .strip_prefix('(')
                .and_then(|p| p.strip_suffix(')'))
                .ok_or_else(|| Error::Parse(format!("expected (coeff,spec), got `{part}`")))?;
            let (coeff_str, spec_str) = split_first_comma(inner)
                .ok_or_else(|| Error::Parse(format!("expected coeff,spec in `{inner}`")))?;
            terms.push((parse_complex(coeff_str)?, parse_mode(spec_str, waist)?));
        }
        return ModeSpec::superposition(terms);
    }
    Err(Error::Parse(format!("unrecognized mode spec `{s}`")))
}

/// Split `(...)+(...)+(...)` at depth-zero `+` signs.
fn split_top_level(s: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(Error::Parse("unbalanced parentheses".into()));
        }
    }
    if depth != 0 {
        return Err(Error::Parse("unbalanced parentheses".into()));
    }
    parts.push(s[start..].trim());
    Ok(parts)
}

/// Split at the first depth-zero comma (the coefficient never contains one).
fn split_first_comma(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: f64 = 1e-3;

    #[test]
    fn parses_simple_specs() {
        assert_eq!(parse_mode("gauss", W).unwrap(), ModeSpec::Gauss { waist: W });
        assert_eq!(
            parse_mode("lg:ell=-2,p=1", W).unwrap(),
            ModeSpec::Lg { ell: -2, p: 1, waist: W }
        );
        assert_eq!(
            parse_mode("lg:ell=3", W).unwrap(),
            ModeSpec::Lg { ell: 3, p: 0, waist: W }
        );
        assert_eq!(
            parse_mode("hg:n=2,m=0", W).unwrap(),
            ModeSpec::Hg { n: 2, m: 0, waist: W }
        );
        assert_eq!(
            parse_mode("vortex:ell=4", W).unwrap(),
            ModeSpec::PhaseVortex { ell: 4, waist: W }
        );
        assert_eq!(
            parse_mode("frac:m=1.5,offset=0.4", W).unwrap(),
            ModeSpec::FracOam { twice_m: 3, offset: 0.4, waist: W }
        );
    }

    #[test]
    fn parses_superposition() {
        let spec = parse_mode("sup:(0.707,lg:ell=1)+(0.707i,lg:ell=-1)", W).unwrap();
        let ModeSpec::Superposition { terms } = spec else { panic!() };
        assert_eq!(terms.len(), 2);
        assert!((terms[0].0.re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
        assert!((terms[1].0.im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3);
    }

    #[test]
    fn complex_coefficient_forms() {
        assert_eq!(parse_complex("0.5").unwrap(), C64::new(0.5, 0.0));
        assert_eq!(parse_complex("0.5i").unwrap(), C64::new(0.0, 0.5));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("1+2i").unwrap(), C64::new(1.0, 2.0));
        assert_eq!(parse_complex("-0.3-0.4i").unwrap(), C64::new(-0.3, -0.4));
        assert_eq!(parse_complex("1e-2i").unwrap(), C64::new(0.0, 0.01));
        assert!(parse_complex("zz").is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_mode("lg:ell", W).is_err());
        assert!(parse_mode("lg:bogus=1", W).is_err());
        assert!(parse_mode("frac:m=0.3", W).is_err());
        assert!(parse_mode("sup:(0.7,lg:ell=1", W).is_err());
        assert!(parse_mode("wibble", W).is_err());
    }

    #[test]
    fn display_roundtrip() {
        for text in ["gauss", "lg:ell=-1,p=2", "hg:n=2,m=0", "vortex:ell=3"] {
            let spec = parse_mode(text, W).unwrap();
            assert_eq!(parse_mode(&spec.to_string(), W).unwrap(), spec);
        }
    }
}
