//! Text forms of ladders, lists, seeds, complex numbers and offset grids.

use cdklab_core::kernel::{square_grid, standard_grid};
use num_complex::Complex64;

/// `"512,1024,2048"` or the doubling rule `"512..4096"`.
pub fn ladder(s: &str) -> Result<Vec<usize>, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| format!("bad ladder start {lo:?}"))?;
        let hi: usize = hi.trim().parse().map_err(|_| format!("bad ladder end {hi:?}"))?;
        if lo == 0 || hi < lo {
            return Err(format!("doubling ladder {s:?} needs 0 < start <= end"));
        }
        let mut out = vec![lo];
        while let Some(next) = out.last().and_then(|n| n.checked_mul(2)).filter(|&n| n <= hi) {
            out.push(next);
        }
        return Ok(out);
    }
    list(s, |t| t.parse::<usize>().map_err(|_| format!("bad count {t:?}")))
}

/// `"1,2,5"` or the inclusive range `"1..5"`.
pub fn seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| format!("bad seed {lo:?}"))?;
        let hi: u64 = hi.trim().parse().map_err(|_| format!("bad seed {hi:?}"))?;
        if hi < lo {
            return Err(format!("empty seed range {s:?}"));
        }
        return Ok((lo..=hi).collect());
    }
    list(s, |t| t.parse::<u64>().map_err(|_| format!("bad seed {t:?}")))
}

pub fn floats(s: &str) -> Result<Vec<f64>, String> {
    list(s, |t| t.parse::<f64>().map_err(|_| format!("bad number {t:?}")))
}

fn list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(item).collect()
}

/// `"0.5+1i"`, `"-0.3-0.8i"`, `"2"`, `"1i"`.
pub fn complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    t.parse::<Complex64>().map_err(|_| format!("bad complex number {s:?}"))
}

/// `"standard"` for `a, b in {-2..2}`, a point list `"-1,0,1"` for its
/// square grid, or explicit pairs `"0:1;1i:-1i"`.
pub fn grid(s: &str) -> Result<Vec<(Complex64, Complex64)>, String> {
    let s = s.trim();
    if s == "standard" {
        return Ok(standard_grid());
    }
    if s.contains(':') {
        return s.split(';').map(str::trim).filter(|t| !t.is_empty()).map(pair).collect();
    }
    let points = list(s, complex)?;
    Ok(square_grid(&points))
}

pub fn pair(s: &str) -> Result<(Complex64, Complex64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("offset pair {s:?} needs the form a:b"))?;
    Ok((complex(a)?, complex(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_ladder() {
        assert_eq!(ladder("512..4096").unwrap(), vec![512, 1024, 2048, 4096]);
        assert_eq!(ladder("3..20").unwrap(), vec![3, 6, 12]);
        assert_eq!(ladder("7, 9").unwrap(), vec![7, 9]);
        assert!(ladder("0..8").is_err());
        assert!(ladder("").unwrap().is_empty());
    }

    #[test]
    fn seed_forms() {
        assert_eq!(seeds("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(seeds("4,2").unwrap(), vec![4, 2]);
    }

    #[test]
    fn complex_forms() {
        assert_eq!(complex("0.5+1i").unwrap(), Complex64::new(0.5, 1.0));
        assert_eq!(complex("-0.3-0.8i").unwrap(), Complex64::new(-0.3, -0.8));
        assert_eq!(complex("1i").unwrap(), Complex64::new(0.0, 1.0));
        assert_eq!(complex(" 2 ").unwrap(), Complex64::new(2.0, 0.0));
        assert!(complex("two").is_err());
    }

    #[test]
    fn grid_forms() {
        assert_eq!(grid("standard").unwrap().len(), 25);
        assert_eq!(grid("-1,1").unwrap().len(), 4);
        let g = grid("0:1; 1i:-1i").unwrap();
        assert_eq!(g[1], (Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)));
        assert!(grid("0;1").is_err());
    }
}
