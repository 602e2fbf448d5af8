use crate::taxonomy::ParaphraseType;

use super::CorpusError;

const INSTRUCTION: &str =
    "Given the following sentence, generate a paraphrase with the following type.";

/// Renders the generation prompt for `original` and the requested types.
///
/// The layout is byte-exact and ends with a single space after `Answer:`:
///
/// ```text
/// Given the following sentence, generate a paraphrase with the following type.
/// Sentence: ['<original>']
/// Paraphrase Types: ['<label1>', '<label2>'].
/// Answer:
/// ```
pub fn render_prompt(original: &str, types: &[ParaphraseType]) -> Result<String, CorpusError> {
    if original.trim().is_empty() || types.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let labels = types
        .iter()
        .map(|t| format!("'{}'", t.label()))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(format!(
        "{INSTRUCTION}\nSentence: ['{original}']\nParaphrase Types: [{labels}].\nAnswer: "
    ))
}

/// Recovers the sentence embedded by [`render_prompt`].
pub fn prompt_sentence(prompt: &str) -> Option<&str> {
    let rest = prompt.strip_prefix(INSTRUCTION)?.strip_prefix("\nSentence: ['")?;
    let end = rest.rfind("']\nParaphrase Types: [")?;
    Some(&rest[..end])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::parse_type;
    use proptest::prelude::*;

    #[test]
    fn single_type_template() {
        let p = render_prompt("The cat sat.", &[ParaphraseType::ADDITION_DELETION]).unwrap();
        assert_eq!(
            p,
            "Given the following sentence, generate a paraphrase with the following type.\nSentence: ['The cat sat.']\nParaphrase Types: ['Addition/Deletion'].\nAnswer: "
        );
    }

    #[test]
    fn multiple_types_are_listed_in_given_order() {
        let types = [
            parse_type("Change of order").unwrap(),
            parse_type("Spelling changes").unwrap(),
        ];
        let p = render_prompt("A.", &types).unwrap();
        assert!(p.contains("Paraphrase Types: ['Change of order', 'Spelling changes'].\n"));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(render_prompt("x", &[]), Err(CorpusError::EmptyInput)));
        assert!(matches!(
            render_prompt("  ", &[ParaphraseType::IDENTITY]),
            Err(CorpusError::EmptyInput)
        ));
    }

    proptest! {
        #[test]
        fn sentence_round_trips(s in "[^\\n]{1,60}", id in 0usize..26) {
            prop_assume!(!s.trim().is_empty());
            let t = ParaphraseType::from_id(id).unwrap();
            let p = render_prompt(&s, &[t]).unwrap();
            prop_assert_eq!(prompt_sentence(&p), Some(s.as_str()));
            prop_assert!(p.ends_with("\nAnswer: "));
        }
    }
}
