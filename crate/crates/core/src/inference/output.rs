/// Maps free-form model output to an inventory label.
///
/// Matching is case-insensitive. The label whose first occurrence is
/// earliest wins; at equal positions the longer label wins, so `elab` cannot
/// shadow `elab-addition`. Returns `None` when no label occurs.
pub fn parse_llm_output<'a>(text: &str, label_inventory: &'a [String]) -> Option<&'a str> {
    let haystack = text.to_lowercase();
    label_inventory
        .iter()
        .filter(|l| !l.is_empty())
        .filter_map(|label| {
            haystack
                .find(&label.to_lowercase())
                .map(|pos| (pos, std::cmp::Reverse(label.len()), label.as_str()))
        })
        .min()
        .map(|(_, _, label)| label)
}
