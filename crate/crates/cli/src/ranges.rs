//! Numeric list arguments: `start:stop:step` (start inclusive, stop
//! exclusive) or comma-separated values.

use teleportsim_core::Error;

pub fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    let s = s.trim();
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("range `{s}` must be start:stop:step")));
        }
        let start: f64 = parse_num(parts[0])?;
        let stop: f64 = parse_num(parts[1])?;
        let step: f64 = parse_num(parts[2])?;
        if !(step > 0.0) || stop < start {
            return Err(Error::Parse(format!("bad range `{s}`")));
        }
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let v = start + step * k as f64;
            if v >= stop - 1e-12 {
                break;
            }
            out.push(v);
            k += 1;
        }
        if out.is_empty() {
            return Err(Error::Parse(format!("range `{s}` is empty")));
        }
        Ok(out)
    } else {
        s.split(',')
            .map(|p| parse_num(p.trim()))
            .collect()
    }
}

fn parse_num(s: &str) -> Result<f64, Error> {
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad number `{s}`")))
}
