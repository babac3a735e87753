//! Integer list syntax shared by `--set` and the sweep grid flags:
//! comma-separated items, each `a`, `a-b` or `a..b` (both inclusive).

/// Parsed list; a newtype so clap treats it as one value rather than a repeated flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdList(pub Vec<usize>);

pub fn parse_id_list(text: &str) -> Result<IdList, String> {
    parse_list(text).map(IdList)
}

pub fn parse_list(text: &str) -> Result<Vec<usize>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(format!("empty item in {text:?}"));
        }
        let range = item.split_once("..").or_else(|| item.split_once('-'));
        match range {
            Some((a, b)) => {
                let (a, b) = (number(a, item)?, number(b, item)?);
                if a > b {
                    return Err(format!("descending range {item:?}"));
                }
                out.extend(a..=b);
            }
            None => out.push(number(item, item)?),
        }
    }
    Ok(out)
}

fn number(s: &str, item: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("malformed item {item:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_list("1,4,5").unwrap(), vec![1, 4, 5]);
        assert_eq!(parse_list("22-28").unwrap(), (22..=28).collect::<Vec<_>>());
        assert_eq!(parse_list("5..7, 10").unwrap(), vec![5, 6, 7, 10]);
        assert_eq!(parse_list(" ").unwrap(), Vec::<usize>::new());
        for bad in ["1,,2", "a", "3-1", "1-", "-2", "1.5"] {
            assert!(parse_list(bad).is_err(), "{bad}");
        }
    }
}
