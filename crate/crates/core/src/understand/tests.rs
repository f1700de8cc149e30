use super::*;
use crate::eld::{train, ModelKind, TrainConfig};
use crate::model::{parse_tagged, render_tagged, Turn};
use proptest::prelude::*;

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn spans(t: &AnnotatedTranscript) -> Vec<(EntityLabel, usize, usize)> {
    t.entities.iter().map(|e| (e.label, e.start, e.end)).collect()
}

#[test]
fn worked_example_round_trips() {
    let g = PhraseologyGrammar::default();
    let t = tag_entities(
        &words("runway three four left cleared to land china southern three two five"),
        &g,
        None,
    );
    assert_eq!(
        spans(&t),
        vec![
            (EntityLabel::Value, 0, 4),
            (EntityLabel::Command, 4, 7),
            (EntityLabel::Callsign, 7, 12),
        ]
    );
    let rendered = render_tagged(&t);
    assert_eq!(
        rendered,
        "<value> runway three four left </value> <command> cleared to land </command> \
         <callsign> china southern three two five </callsign>"
    );
    assert_eq!(parse_tagged(&rendered).unwrap(), t);
}

#[test]
fn no_entities_in_greeting() {
    let g = PhraseologyGrammar::default();
    let t = tag_entities(&words("good morning"), &g, None);
    assert!(t.entities.is_empty());
    assert!(tag_entities::<&str>(&[], &g, None).entities.is_empty());
}

#[test]
fn context_recovers_garbled_callsign() {
    let g = PhraseologyGrammar::default();
    let garbled = words("descend china southern three two");
    let plain = tag_entities(&garbled, &g, None);
    assert_eq!(plain.spans(EntityLabel::Callsign).count(), 1);

    let cut = words("china southern three two");
    let ctx = ContextList::new(vec!["CSN325".into()]);
    let t = tag_entities(&cut, &g, Some(&ctx));
    assert_eq!(spans(&t), vec![(EntityLabel::Callsign, 0, 4)]);

    // A shorter partial match falls below the threshold.
    let short = words("china southern three");
    let t = tag_entities(&short, &g, Some(&ctx));
    assert_eq!(spans(&t), vec![(EntityLabel::Callsign, 0, 3)]);
    assert!(lcs(&words("a b c"), &words("a x c")) == 2);
}

#[test]
fn context_match_spelled_registration() {
    let g = PhraseologyGrammar::default();
    let ctx = ContextList::new(vec!["OKABC".into()]);
    // Missing one letter: 4 of 5 tokens still match.
    let t = tag_entities(&words("oscar kilo alfa charlie cleared to land"), &g, Some(&ctx));
    assert_eq!(spans(&t)[0], (EntityLabel::Callsign, 0, 4));
}

#[test]
fn priority_resolves_conflicts() {
    let g = PhraseologyGrammar::default();
    // "squawk code ..." is a value and wins over the "squawk" command.
    let t = tag_entities(&words("squawk code one two three four"), &g, None);
    assert_eq!(spans(&t), vec![(EntityLabel::Value, 0, 6)]);
    let t = tag_entities(&words("lufthansa one two turn left heading two seven zero"), &g, None);
    assert_eq!(
        spans(&t),
        vec![
            (EntityLabel::Callsign, 0, 3),
            (EntityLabel::Command, 3, 5),
            (EntityLabel::Value, 5, 9),
        ]
    );
}

#[test]
fn template_matching() {
    let t = Template::parse("runway <digits> <left|right|center>?").unwrap();
    assert_eq!(t.longest_match(&words("runway two four"), 0), Some(3));
    assert_eq!(t.longest_match(&words("runway two four right x"), 0), Some(4));
    assert_eq!(t.longest_match(&words("runway left"), 0), None);
    let f = Template::parse("<digits> decimal <digits>").unwrap();
    assert_eq!(f.longest_match(&words("one one eight decimal five"), 0), Some(5));
    assert!(Template::parse("<left|>").is_err());
    assert!(Template::parse("Runway").is_err());
    assert!(Template::parse("x?").is_err());
    assert_eq!(t.instantiate(&["two", "four"], "alfa", 1), words("runway two four right"));
}

#[test]
fn grammar_json_round_trip_and_errors() {
    let g = PhraseologyGrammar::default();
    let back = PhraseologyGrammar::from_json(&g.to_json(), g.airlines.clone()).unwrap();
    assert_eq!(back.commands, g.commands);
    assert_eq!(back.value_templates, g.value_templates);
    assert!(PhraseologyGrammar::from_json(
        r#"{"commands":[""],"value_templates":[]}"#,
        g.airlines.clone()
    )
    .is_err());
    assert!(PhraseologyGrammar::from_json(
        r#"{"commands":["Descend"],"value_templates":[]}"#,
        g.airlines.clone()
    )
    .is_err());
    let readback = g.readback_of(&words("line up and wait")).unwrap();
    assert_eq!(readback, &words("lining up and waiting"));
    assert_eq!(g.readback_of(&words("taxi to")).unwrap(), &words("taxiing to"));
    assert_eq!(g.readback_of(&words("stop climb")).unwrap(), &words("stopping climb"));
    assert!(g.readback_of(&words("cleared to land")).is_none());
    assert!(g.imperatives().all(|c| !PhraseologyGrammar::is_readback(c)));
}

fn role_model() -> LinearTextModel {
    let atco = [
        "lufthansa one two descend flight level eight zero",
        "speedbird one climb flight level three four zero",
        "ryanair four five contact tower one one eight decimal five",
        "swiss two turn left heading two seven zero",
        "austrian one two three reduce speed two two zero knots",
    ];
    let pilot = [
        "descending flight level eight zero lufthansa one two",
        "climbing flight level three four zero speedbird one",
        "contacting tower one one eight decimal five ryanair four five",
        "turning left heading two seven zero swiss two",
        "reducing speed two two zero knots austrian one two three",
    ];
    let corpus: Vec<_> = atco
        .iter()
        .map(|s| (term_counts(&words(s)), 1))
        .chain(pilot.iter().map(|s| (term_counts(&words(s)), 0)))
        .collect();
    train(ModelKind::Role, &corpus, TrainConfig::default()).unwrap()
}

#[test]
fn role_detection() {
    let m = role_model();
    let (role, p) = detect_role(&words("lufthansa one two descend flight level eight zero"), &m).unwrap();
    assert_eq!(role, Role::Atco);
    assert!(p >= 0.5);
    let (role, p) = detect_role(&words("descending flight level eight zero lufthansa one two"), &m).unwrap();
    assert_eq!(role, Role::Pilot);
    assert!(p >= 0.5);
    assert!(matches!(detect_role::<&str>(&[], &m), Err(EldError::EmptyEvidence)));
}

#[test]
fn diarization_examples() {
    let g = PhraseologyGrammar::default();
    let single = words("lufthansa one two descend flight level eight zero");
    assert_eq!(diarize_text(&single, &g), vec![Turn::new(Role::Atco, 0, 8)]);

    let pair = words("lufthansa one two descend eight zero descending eight zero lufthansa one two");
    assert_eq!(pair.len(), 12);
    assert_eq!(
        diarize_text(&pair, &g),
        vec![
            Turn::new(Role::Atco, 0, 6),
            Turn::new(Role::Pilot, 6, 12),
        ]
    );

    let three = words(
        "descending flight level one two zero speedbird one good morning ryanair four five climb flight level three four zero",
    );
    let turns = diarize_text(&three, &g);
    assert_eq!(
        turns,
        vec![
            Turn::new(Role::Pilot, 0, 8),
            Turn::new(Role::Atco, 8, 19),
        ]
    );
    assert!(diarize_text::<&str>(&[], &g).is_empty());
}

const POOL: [&str; 16] = [
    "lufthansa", "one", "two", "descend", "descending", "good", "morning", "flight", "level", "x-ray",
    "alfa", "bravo", "runway", "left", "cleared", "land",
];

proptest! {
    #[test]
    fn tagger_output_is_valid(idx in prop::collection::vec(0usize..POOL.len(), 0..25), with_ctx in any::<bool>()) {
        let g = PhraseologyGrammar::default();
        let toks: Vec<&str> = idx.iter().map(|&i| POOL[i]).collect();
        let ctx = ContextList::new(vec!["DLH12".into(), "XAB".into()]);
        let t = tag_entities(&toks, &g, with_ctx.then_some(&ctx));
        prop_assert!(t.validate().is_ok());
    }

    #[test]
    fn turns_partition_and_keep_entities_whole(idx in prop::collection::vec(0usize..POOL.len(), 1..25)) {
        let g = PhraseologyGrammar::default();
        let toks: Vec<&str> = idx.iter().map(|&i| POOL[i]).collect();
        let turns = diarize_text(&toks, &g);
        let mut cursor = 0;
        for t in &turns {
            prop_assert_eq!(t.start, cursor);
            prop_assert!(t.end > t.start);
            cursor = t.end;
        }
        prop_assert_eq!(cursor, toks.len());
        let tagged = tag_entities(&toks, &g, None);
        for e in &tagged.entities {
            prop_assert!(turns.iter().any(|t| t.start <= e.start && e.end <= t.end));
        }
    }
}
