/// Lowercases a tag and joins its whitespace-separated words with `_`.
///
/// `"Number Theory"` and `"number_theory"` both become `"number_theory"`.
pub fn normalize_tag(raw: &str) -> String {
    raw.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join("_")
}

/// Normalizes every tag, drops empties and duplicates, keeps first-seen order.
pub fn normalize_tags<I, S>(raw: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out: Vec<String> = Vec::new();
    for tag in raw {
        let tag = normalize_tag(tag.as_ref());
        if !tag.is_empty() && !out.contains(&tag) {
            out.push(tag);
        }
    }
    out
}

pub fn is_normalized(tag: &str) -> bool {
    !tag.is_empty() && normalize_tag(tag) == tag
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spaces_become_underscores() {
        assert_eq!(normalize_tag("Number  Theory"), "number_theory");
        assert_eq!(normalize_tag(" modular arithmetic "), "modular_arithmetic");
        assert_eq!(normalize_tag("number_theory"), "number_theory");
    }

    #[test]
    fn dedup_after_normalizing() {
        let tags = normalize_tags(["Inequality", "inequality", "", "number theory"]);
        assert_eq!(tags, vec!["inequality", "number_theory"]);
    }
}
