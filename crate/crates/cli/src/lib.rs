//! Library surface of the command-line front end, split out so integration
//! and acceptance tests can drive the same code paths as the binary.

pub mod commands;
pub mod config;

/// Parses an inclusive seed range: either `A..B` or a single seed `N`.
pub fn parse_seed_range(s: &str) -> Result<std::ops::RangeInclusive<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let start: u64 = a.trim().parse().map_err(|_| format!("bad seed range '{s}'"))?;
        let end: u64 = b.trim().parse().map_err(|_| format!("bad seed range '{s}'"))?;
        if start > end {
            return Err(format!("empty seed range '{s}'"));
        }
        Ok(start..=end)
    } else {
        let seed: u64 = s.trim().parse().map_err(|_| format!("bad seed '{s}'"))?;
        Ok(seed..=seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seed_range("1..20").unwrap(), 1..=20);
        assert_eq!(parse_seed_range("7").unwrap(), 7..=7);
        assert!(parse_seed_range("9..2").is_err());
        assert!(parse_seed_range("x").is_err());
    }
}
