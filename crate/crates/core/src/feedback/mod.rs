//! Rubric-aligned feedback text from verified violations.
//!
//! Every sentence a template produces is tied to one violation, and each
//! error type owns a keyword list no other template uses. The same keyword
//! extractor drives the evaluation heuristics, so "the text mentions exactly
//! the verified error types" is a checkable property.

mod external;
mod pipeline;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constraints::Violation;
use crate::error::{Error, Result};
use crate::types::{ErrorType, ScenarioKey};

pub use external::{ExternalClient, ExternalConfig, Generated, DEFAULT_RUBRIC_PROMPT, ENDPOINT_ENV};
pub use pipeline::{FeedbackReport, Pipeline, PipelineConfig};

/// Returned verbatim when no violation was verified.
pub const CORRECT_DIAGRAM: &str = "Diagram looks correct per scenario key.";

/// Canonical fix verbs; every error type uses exactly one.
pub const FIX_VERBS: [&str; 7] = ["add", "remove", "flip", "reverse", "redraw", "move", "connect"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Grammar,
    VisionOnly,
    External,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Grammar => "grammar",
            Mode::VisionOnly => "vision-only",
            Mode::External => "external",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "grammar" => Ok(Mode::Grammar),
            "vision-only" | "vision_only" | "vision" => Ok(Mode::VisionOnly),
            "external" => Ok(Mode::External),
            _ => Err(Error::invalid(format!(
                "unknown mode '{s}' (expected grammar, vision-only or external)"
            ))),
        }
    }
}

pub fn fix_verb(t: ErrorType) -> &'static str {
    match t {
        ErrorType::MissingForce | ErrorType::MissingGround | ErrorType::MissingComponent => "add",
        ErrorType::ExtraForce => "remove",
        ErrorType::WrongPolarity => "flip",
        ErrorType::WrongDirection => "reverse",
        ErrorType::IllegalJunction => "redraw",
        ErrorType::AnchorError => "move",
        ErrorType::OpenCircuit => "connect",
    }
}

/// Lower-case phrases that identify an error type in free text.
pub fn error_keywords(t: ErrorType) -> &'static [&'static str] {
    match t {
        ErrorType::MissingForce => &["missing force", "force is missing", "forces do not balance"],
        ErrorType::WrongDirection => &["wrong direction", "points the wrong way"],
        ErrorType::AnchorError => &["anchor error", "point of application", "wrong place"],
        ErrorType::ExtraForce => &["extra force", "extraneous force", "does not act on"],
        ErrorType::WrongPolarity => &["polarity", "backwards"],
        ErrorType::OpenCircuit => &["open circuit", "not joined", "not connected"],
        ErrorType::IllegalJunction => &["junction"],
        ErrorType::MissingGround => &["missing ground", "ground symbol", "no ground"],
        ErrorType::MissingComponent => &["missing component", "component is missing"],
    }
}

/// Error types whose keywords occur in `text` (case-insensitive).
pub fn mentioned_types(text: &str) -> BTreeSet<ErrorType> {
    let lower = text.to_lowercase();
    ErrorType::all()
        .filter(|t| error_keywords(*t).iter().any(|k| lower.contains(k)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricItem {
    pub violation: Violation,
    pub diagnosis_text: String,
    pub fix_text: String,
}

/// Compass-style description of an orientation.
fn heading(deg: f64) -> String {
    const NAMES: [&str; 8] = [
        "to the right",
        "up and to the right",
        "straight up",
        "up and to the left",
        "to the left",
        "down and to the left",
        "straight down",
        "down and to the right",
    ];
    let d = crate::geometry::normalize_deg(deg);
    let sector = ((d + 22.5) / 45.0).floor() as usize % 8;
    if (d - sector as f64 * 45.0).abs() < 1.0 || (d - 360.0).abs() < 1.0 {
        NAMES[sector].to_string()
    } else {
        format!("{} (about {d:.0}°)", NAMES[sector])
    }
}

/// "a" or "an" for the word that follows. "LED" is read letter by letter.
fn article(word: &str) -> &'static str {
    let vowel_sound = word.starts_with("LED") || word.starts_with(|c: char| "aeiouAEIOU".contains(c));
    if vowel_sound {
        "an"
    } else {
        "a"
    }
}

/// How to refer to a force arrow: unlabeled detections are already "arrow #n".
fn arrow_phrase(target: &str) -> String {
    if target.starts_with("arrow #") {
        target.to_string()
    } else {
        format!("the {target} arrow")
    }
}

fn item(v: &Violation, key: &ScenarioKey) -> RubricItem {
    let t = &v.target;
    let param = |k: &str| v.params.get(k).cloned().unwrap_or_else(|| "?".into());
    let (diagnosis, fix) = match v.error_type {
        ErrorType::MissingForce if v.constraint_id == "force_balance" => (
            "The drawn forces do not balance on a body at rest, so a missing force is likely.".to_string(),
            format!("Add the force that cancels the leftover {t}."),
        ),
        ErrorType::MissingForce => {
            let dir = key.force(t).map(|f| heading(f.direction));
            (
                format!("Missing force: {t} acts on the body but is not drawn."),
                match dir {
                    Some(d) => format!("Add {} {t} arrow starting at the body and pointing {d}.", article(t)),
                    None => format!("Add {} {t} arrow starting at the body.", article(t)),
                },
            )
        }
        ErrorType::WrongDirection => {
            let dir = key.force(t).map_or_else(|| format!("{}°", param("expected_deg")), |f| heading(f.direction));
            (
                format!(
                    "Wrong direction: the {t} arrow is drawn at {}° instead of {}°.",
                    param("observed_deg"),
                    param("expected_deg")
                ),
                format!("Reverse the {t} arrow so it points {dir}."),
            )
        }
        ErrorType::AnchorError => (
            format!(
                "Anchor error: the {t} arrow starts {} px from its point of application.",
                param("offset_px")
            ),
            format!("Move the tail of the {t} arrow onto the body where the force acts."),
        ),
        ErrorType::ExtraForce => (
            format!("Extra force: {t} does not act on this body."),
            format!("Remove {}.", arrow_phrase(t)),
        ),
        ErrorType::WrongPolarity => (
            format!("Wrong polarity: {t} is drawn backwards."),
            format!("Flip {t} end to end so its orientation matches the circuit."),
        ),
        ErrorType::OpenCircuit => {
            let (a, b) = t.split_once('-').unwrap_or((t.as_str(), "the rest of the circuit"));
            (
                format!("Open circuit: {a} and {b} are not joined by a wire."),
                format!("Connect {a} to {b} with a wire (link {t})."),
            )
        }
        ErrorType::IllegalJunction if param("expected") == "no dot" => (
            "Illegal junction: a dot joins two wires that should only cross.".to_string(),
            format!("Redraw the {t} without the dot so the wires pass over each other."),
        ),
        ErrorType::IllegalJunction => (
            "Illegal junction: two wires that should join cross without a dot.".to_string(),
            format!("Redraw the {t} with a dot where the wires meet."),
        ),
        ErrorType::MissingGround => (
            "Missing ground: the circuit has no ground symbol.".to_string(),
            format!("Add a {t} symbol to the reference node."),
        ),
        ErrorType::MissingComponent => {
            let kind = key.component(t).map(|c| c.kind.name()).unwrap_or("part");
            (
                format!("Missing component: {t} ({kind}) is not in the drawing."),
                format!("Add {t}, {} {kind}, in its place in the circuit.", article(kind)),
            )
        }
    };
    RubricItem {
        violation: v.clone(),
        diagnosis_text: diagnosis,
        fix_text: fix,
    }
}

/// One rubric item per violation, in order.
pub fn map_to_rubric(violations: &[Violation], key: &ScenarioKey) -> Result<Vec<RubricItem>> {
    for v in violations {
        if v.error_type.domain() != key.domain {
            return Err(Error::DomainMismatch {
                expected: key.domain,
                actual: v.error_type.domain(),
            });
        }
    }
    Ok(violations.iter().map(|v| item(v, key)).collect())
}

pub fn render_feedback(items: &[RubricItem]) -> String {
    if items.is_empty() {
        return CORRECT_DIAGRAM.to_string();
    }
    items
        .iter()
        .enumerate()
        .map(|(i, it)| format!("{}. {} {}", i + 1, it.diagnosis_text, it.fix_text))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{list_keys, render::extra_force_name};
    use crate::types::Domain;
    use std::collections::BTreeMap;

    fn violation(t: ErrorType, target: &str) -> Violation {
        Violation {
            constraint_id: "test".into(),
            error_type: t,
            target: target.into(),
            evidence: vec![],
            confidence: 0.9,
            params: BTreeMap::new(),
        }
    }

    /// Every (type, target) a checker can emit for the built-in scenarios.
    fn all_violations(key: &ScenarioKey) -> Vec<Violation> {
        let mut out = Vec::new();
        match key.domain {
            Domain::Fbd => {
                for f in &key.required_forces {
                    for t in [ErrorType::MissingForce, ErrorType::WrongDirection, ErrorType::AnchorError] {
                        out.push(violation(t, &f.name));
                    }
                }
                for i in 0..3 {
                    out.push(violation(ErrorType::ExtraForce, extra_force_name(i)));
                }
                out.push(violation(ErrorType::ExtraForce, "arrow #4"));
                let mut bal = violation(ErrorType::MissingForce, "net_force");
                bal.constraint_id = "force_balance".into();
                out.push(bal);
            }
            Domain::Circuit => {
                for c in &key.components {
                    out.push(violation(ErrorType::MissingComponent, &c.id));
                    out.push(violation(ErrorType::WrongPolarity, &c.id));
                }
                for (a, b) in &key.connections {
                    out.push(violation(ErrorType::OpenCircuit, &format!("{a}-{b}")));
                }
                out.push(violation(ErrorType::MissingGround, "ground"));
                let mut j = violation(ErrorType::IllegalJunction, "junction");
                out.push(j.clone());
                j.params.insert("expected".into(), "no dot".into());
                out.push(j);
            }
        }
        out
    }

    #[test]
    fn empty_violations_give_the_correct_diagram_string() {
        let key = &list_keys(Domain::Fbd)[0];
        let items = map_to_rubric(&[], key).unwrap();
        assert!(items.is_empty());
        assert_eq!(render_feedback(&items), "Diagram looks correct per scenario key.");
    }

    #[test]
    fn missing_friction_template() {
        let key = list_keys(Domain::Fbd).into_iter().find(|k| k.id == "inclined_plane").unwrap();
        let items = map_to_rubric(&[violation(ErrorType::MissingForce, "friction")], &key).unwrap();
        assert!(items[0].diagnosis_text.contains("friction"));
        assert!(items[0].fix_text.starts_with("Add"));
    }

    #[test]
    fn wrong_polarity_template_names_the_part() {
        let key = list_keys(Domain::Circuit).into_iter().find(|k| k.component("D1").is_some()).unwrap();
        let items = map_to_rubric(&[violation(ErrorType::WrongPolarity, "D1")], &key).unwrap();
        let fix = items[0].fix_text.to_lowercase();
        assert!(fix.contains("flip") || fix.contains("reverse"));
        assert!(items[0].fix_text.contains("D1"));
    }

    #[test]
    fn templates_mention_only_their_own_type_and_carry_verb_and_target() {
        for domain in [Domain::Fbd, Domain::Circuit] {
            for key in list_keys(domain) {
                for v in all_violations(&key) {
                    let it = &map_to_rubric(std::slice::from_ref(&v), &key).unwrap()[0];
                    let text = render_feedback(std::slice::from_ref(it));
                    assert_eq!(
                        mentioned_types(&text),
                        BTreeSet::from([v.error_type]),
                        "{}: {text}",
                        key.id
                    );
                    let fix = it.fix_text.to_lowercase();
                    assert!(fix.starts_with(fix_verb(v.error_type)), "{fix}");
                    assert!(it.fix_text.contains(&v.target), "{}", it.fix_text);
                }
            }
        }
    }

    #[test]
    fn numbered_lines_in_violation_order() {
        let key = list_keys(Domain::Circuit).into_iter().find(|k| k.requires_ground).unwrap();
        let c = &key.components[0].id;
        let vs = [
            violation(ErrorType::MissingGround, "ground"),
            violation(ErrorType::MissingComponent, c),
            violation(ErrorType::IllegalJunction, "junction"),
        ];
        let text = render_feedback(&map_to_rubric(&vs, &key).unwrap());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("1. Missing ground"));
        assert!(lines[1].starts_with("2. Missing component"));
        assert!(lines[2].starts_with("3. Illegal junction"));
    }

    #[test]
    fn cross_domain_violation_is_rejected() {
        let key = &list_keys(Domain::Fbd)[0];
        let err = map_to_rubric(&[violation(ErrorType::MissingGround, "ground")], key).unwrap_err();
        assert!(matches!(err, Error::DomainMismatch { .. }));
    }

    #[test]
    fn verbs_are_canonical() {
        for t in ErrorType::all() {
            assert!(FIX_VERBS.contains(&fix_verb(t)));
        }
    }

    #[test]
    fn mode_parses_and_prints() {
        for m in [Mode::Grammar, Mode::VisionOnly, Mode::External] {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("llava".parse::<Mode>().is_err());
        assert_eq!(serde_json::to_string(&Mode::VisionOnly).unwrap(), "\"vision-only\"");
    }

    #[test]
    fn articles_and_arrow_phrases() {
        assert_eq!(article("applied"), "an");
        assert_eq!(article("gravity"), "a");
        assert_eq!(article("LED"), "an");
        assert_eq!(article("resistor"), "a");
        assert_eq!(arrow_phrase("arrow #0"), "arrow #0");
        assert_eq!(arrow_phrase("impetus"), "the impetus arrow");
    }

    #[test]
    fn headings() {
        assert_eq!(heading(270.0), "straight down");
        assert_eq!(heading(0.0), "to the right");
        assert_eq!(heading(-0.4), "to the right");
        assert!(heading(110.0).contains("110"));
    }
}
