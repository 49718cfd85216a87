//! Agree-probe prompt text.

use crate::features::AffectClass;
use crate::gateway::PredictionMessage;

fn arousal_word(c: AffectClass) -> Option<&'static str> {
    match c {
        AffectClass::High => Some("excited"),
        AffectClass::Low => Some("calm"),
        AffectClass::Neutral => None,
    }
}

fn valence_word(c: AffectClass) -> Option<&'static str> {
    match c {
        AffectClass::High => Some("positive"),
        AffectClass::Low => Some("negative"),
        AffectClass::Neutral => None,
    }
}

/// `"Your AI companion thinks you would feel {words} about this design change, do you agree?"`
/// with arousal then valence words joined by "and"; a fully neutral
/// prediction reads "thinks you have no strong feeling about ...".
pub fn prompt_for(arousal: AffectClass, valence: AffectClass) -> String {
    let words: Vec<&str> = [arousal_word(arousal), valence_word(valence)].into_iter().flatten().collect();
    if words.is_empty() {
        "Your AI companion thinks you have no strong feeling about this design change, do you agree?".to_string()
    } else {
        format!(
            "Your AI companion thinks you would feel {} about this design change, do you agree?",
            words.join(" and ")
        )
    }
}

pub fn agree_prompt_text(prediction: &PredictionMessage) -> String {
    prompt_for(prediction.arousal, prediction.valence)
}
