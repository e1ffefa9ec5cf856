use crate::error::{Error, Result};
use crate::text::{syllables, TokenSeq};

/// Flesch-Kincaid grade level; punctuation is not counted as words.
pub fn fk_grade(text: &TokenSeq) -> Result<f64> {
    let words = text.word_count();
    if words == 0 {
        return Err(Error::EmptyInput("no words for readability".into()));
    }
    let syl: usize = text.words().map(syllables).sum();
    Ok(fk_from_counts(words, text.sentence_count(), syl))
}

pub fn fk_from_counts(words: usize, sentences: usize, syllables: usize) -> f64 {
    let w = words as f64;
    0.39 * (w / sentences as f64) + 11.8 * (syllables as f64 / w) - 15.59
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn the_cat_sat() {
        let fk = fk_grade(&tokenize("The cat sat.").unwrap()).unwrap();
        assert!((fk - (0.39 * 3.0 + 11.8 - 15.59)).abs() < 1e-12);
        assert!((fk + 2.62).abs() < 1e-9);
    }

    #[test]
    fn longer_sentences_raise_grade() {
        let short = fk_grade(&tokenize("the cat sat .").unwrap()).unwrap();
        let long = fk_grade(&tokenize("the cat sat on a red mat .").unwrap()).unwrap();
        assert!(long > short);
    }

    #[test]
    fn duplicated_text_same_grade() {
        let one = fk_grade(&tokenize("the dog barked loudly at night .").unwrap()).unwrap();
        let two = fk_grade(&tokenize("the dog barked loudly at night . the dog barked loudly at night .").unwrap()).unwrap();
        assert!((one - two).abs() < 1e-12);
    }
}
