//! Small parsing helpers shared by the string spec formats
//! (`grid:...`, `gaussian:...`, `body:...`).

/// Split on `sep` at bracket depth zero; `[]` and `()` nest.
pub fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    let tail = s[start..].trim();
    if !tail.is_empty() || !out.is_empty() {
        out.push(tail);
    }
    out.retain(|p| !p.is_empty());
    out
}

/// Strip one layer of surrounding parentheses, if present.
pub fn unwrap_parens(s: &str) -> &str {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') {
        &t[1..t.len() - 1]
    } else {
        t
    }
}

/// `0.2` or `[0.2,-1]`.
pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    let t = s.trim();
    let inner = if t.starts_with('[') && t.ends_with(']') {
        &t[1..t.len() - 1]
    } else {
        t
    };
    inner
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{}`", v.trim()))
        })
        .collect()
}

/// `[-1,1]x[0,2]` into per-axis intervals.
pub fn parse_box(s: &str) -> Result<Vec<(f64, f64)>, String> {
    split_top_level(s, 'x')
        .into_iter()
        .map(|iv| {
            let v = parse_vector(iv)?;
            match v.as_slice() {
                [lo, hi] if hi > lo => Ok((*lo, *hi)),
                _ => Err(format!("bad interval `{iv}`")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_respecting_nesting() {
        let parts = split_top_level("t=0.5,base=(tilt:t=1,theta=[1,2]),theta=[0,1]", ',');
        assert_eq!(parts, vec!["t=0.5", "base=(tilt:t=1,theta=[1,2])", "theta=[0,1]"]);
    }

    #[test]
    fn parses_boxes() {
        assert_eq!(parse_box("[-1,1]x[0,2.5]").unwrap(), vec![(-1.0, 1.0), (0.0, 2.5)]);
        assert!(parse_box("[1,-1]").is_err());
    }
}
