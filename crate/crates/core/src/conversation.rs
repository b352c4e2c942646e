//! Conversation domain types and corpus-level preprocessing.
//!
//! A corpus is a set of two-party conversations between a *seeker* (the person
//! asking for help) and a *responder* (the counselor). Raw utterances are
//! merged into alternating [`Turn`]s; a [`Moment`] is a prefix of turns that
//! ends with a seeker turn, i.e. a point where the responder is about to reply.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Metadata key set when a record carried no timestamps and ordinals were substituted.
pub const TIMESTAMPS_KEY: &str = "timestamps";
/// Value of [`TIMESTAMPS_KEY`] for conversations with ordinal (synthetic) timestamps.
pub const ORDINAL_TIMESTAMPS: &str = "ordinal";
/// Metadata key recording which heuristic fired in [`label_disengagement`].
pub const TRIGGER_KEY: &str = "disengagement_trigger";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConversationError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate conversation id {0:?}")]
    DuplicateId(String),
    #[error("conversation {0:?} has no utterances")]
    EmptyConversation(String),
    #[error("conversation {0:?} is too short to truncate")]
    TooShort(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("turn {0} has no responder reply")]
    NoReply(usize),
    #[error("reply at turn {0} is timestamped before the seeker's last message")]
    NegativeGap(usize),
    #[error("turn {0} is not a seeker turn")]
    NotSeekerTurn(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Seeker,
    Responder,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Seeker => "seeker",
            Role::Responder => "responder",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Disengaged,
    Unknown,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Disengaged => "disengaged",
            Outcome::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    #[serde(rename = "speaker")]
    pub speaker_id: String,
    pub role: Role,
    pub text: String,
    pub timestamp_ms: u64,
}

impl Utterance {
    pub fn new(speaker_id: impl Into<String>, role: Role, text: impl Into<String>, timestamp_ms: u64) -> Self {
        Self {
            speaker_id: speaker_id.into(),
            role,
            text: text.into(),
            timestamp_ms,
        }
    }
}

/// A maximal run of consecutive same-role utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub messages: Vec<Utterance>,
    pub index: usize,
}

impl Turn {
    /// Message texts joined by newlines.
    pub fn text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn first_timestamp(&self) -> Option<u64> {
        self.messages.first().map(|m| m.timestamp_ms)
    }

    pub fn last_timestamp(&self) -> Option<u64> {
        self.messages.last().map(|m| m.timestamp_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub outcome: Outcome,
    pub utterances: Vec<Utterance>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl Conversation {
    /// True when timestamps came from the source rather than being ordinals.
    pub fn has_real_timestamps(&self) -> bool {
        self.metadata.get(TIMESTAMPS_KEY).map(String::as_str) != Some(ORDINAL_TIMESTAMPS)
    }
}

/// A context prefix ending with a seeker turn; the responder replies next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub conversation_id: String,
    pub k: usize,
    pub context: Vec<Turn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeLabel {
    pub outcome: Outcome,
    pub trigger: Option<String>,
}

// Wire form of one corpus line. Timestamps are optional on input.
#[derive(Deserialize)]
struct RawRecord {
    id: String,
    outcome: Outcome,
    utterances: Vec<RawUtterance>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct RawUtterance {
    speaker: String,
    role: Role,
    text: String,
    #[serde(default)]
    timestamp_ms: Option<u64>,
}

/// Parses a JSON Lines corpus. Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_corpus<R: BufRead>(source: R) -> Result<Vec<Conversation>, ConversationError> {
    let mut seen = HashSet::new();
    let mut corpus = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| ConversationError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| ConversationError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        let conversation = validate_record(raw, line_no)?;
        if !seen.insert(conversation.id.clone()) {
            return Err(ConversationError::DuplicateId(conversation.id));
        }
        corpus.push(conversation);
    }
    Ok(corpus)
}

fn validate_record(raw: RawRecord, line: usize) -> Result<Conversation, ConversationError> {
    if raw.utterances.is_empty() {
        return Err(ConversationError::EmptyConversation(raw.id));
    }
    let timed = raw.utterances.iter().all(|u| u.timestamp_ms.is_some());
    let untimed = raw.utterances.iter().all(|u| u.timestamp_ms.is_none());
    if !timed && !untimed {
        return Err(ConversationError::MalformedRecord {
            line,
            reason: "timestamp_ms must be present on all utterances or on none".into(),
        });
    }
    let mut metadata = raw.metadata;
    if untimed {
        metadata.insert(TIMESTAMPS_KEY.into(), ORDINAL_TIMESTAMPS.into());
    }
    let mut utterances = Vec::with_capacity(raw.utterances.len());
    for (ordinal, u) in raw.utterances.into_iter().enumerate() {
        if u.text.trim().is_empty() {
            return Err(ConversationError::MalformedRecord {
                line,
                reason: format!("utterance {ordinal} has empty text"),
            });
        }
        utterances.push(Utterance {
            speaker_id: u.speaker,
            role: u.role,
            text: u.text,
            timestamp_ms: u.timestamp_ms.unwrap_or(ordinal as u64),
        });
    }
    // Stable: equal timestamps keep file order.
    utterances.sort_by_key(|u| u.timestamp_ms);
    Ok(Conversation {
        id: raw.id,
        outcome: raw.outcome,
        utterances,
        metadata,
    })
}

/// Writes one conversation per line in the corpus format.
pub fn write_corpus<W: Write>(mut sink: W, corpus: &[Conversation]) -> Result<(), ConversationError> {
    for conversation in corpus {
        let line = serde_json::to_string(conversation).map_err(|e| ConversationError::Io(e.to_string()))?;
        writeln!(sink, "{line}").map_err(|e| ConversationError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Collapses consecutive same-role utterances into alternating turns.
pub fn merge_turns(conversation: &Conversation) -> Result<Vec<Turn>, ConversationError> {
    if conversation.utterances.is_empty() {
        return Err(ConversationError::EmptyConversation(conversation.id.clone()));
    }
    Ok(turns_from_utterances(&conversation.utterances))
}

pub(crate) fn turns_from_utterances(utterances: &[Utterance]) -> Vec<Turn> {
    let mut turns: Vec<Turn> = Vec::new();
    for u in utterances {
        match turns.last_mut() {
            Some(turn) if turn.role == u.role => turn.messages.push(u.clone()),
            _ => {
                let index = turns.len();
                turns.push(Turn {
                    role: u.role,
                    messages: vec![u.clone()],
                    index,
                });
            }
        }
    }
    turns
}

/// Inverse of [`merge_turns`].
pub fn flatten_turns(turns: &[Turn]) -> Vec<Utterance> {
    turns.iter().flat_map(|t| t.messages.iter().cloned()).collect()
}

/// Case-insensitive closing phrases that mark a responder giving up on a silent seeker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisengagementRules {
    pub phrases: Vec<String>,
    pub unanswered_question: bool,
}

impl Default for DisengagementRules {
    fn default() -> Self {
        Self {
            phrases: vec![
                "stepped away from your phone".into(),
                "haven't heard from you".into(),
                "wanted to check in".into(),
            ],
            unanswered_question: true,
        }
    }
}

fn normalize_for_match(text: &str) -> String {
    text.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'")
}

/// Heuristic disengagement label. Never yields [`Outcome::Success`].
pub fn label_disengagement(
    conversation: &Conversation,
    rules: &DisengagementRules,
) -> Result<OutcomeLabel, ConversationError> {
    let last = conversation
        .utterances
        .last()
        .ok_or_else(|| ConversationError::EmptyConversation(conversation.id.clone()))?;
    let unknown = OutcomeLabel {
        outcome: Outcome::Unknown,
        trigger: None,
    };
    if last.role != Role::Responder {
        return Ok(unknown);
    }
    let text = normalize_for_match(&last.text);
    for phrase in &rules.phrases {
        if phrase.is_empty() {
            continue;
        }
        if text.contains(&normalize_for_match(phrase)) {
            return Ok(OutcomeLabel {
                outcome: Outcome::Disengaged,
                trigger: Some(phrase.clone()),
            });
        }
    }
    if rules.unanswered_question && text.trim_end().ends_with('?') {
        return Ok(OutcomeLabel {
            outcome: Outcome::Disengaged,
            trigger: Some("?".into()),
        });
    }
    Ok(unknown)
}

/// Applies [`label_disengagement`] and records the result on the conversation.
/// Survey-derived `Success` labels are left untouched.
pub fn apply_label(conversation: &mut Conversation, rules: &DisengagementRules) -> Result<OutcomeLabel, ConversationError> {
    let label = label_disengagement(conversation, rules)?;
    if conversation.outcome != Outcome::Success && label.outcome == Outcome::Disengaged {
        conversation.outcome = Outcome::Disengaged;
        if let Some(trigger) = &label.trigger {
            conversation.metadata.insert(TRIGGER_KEY.into(), trigger.clone());
        }
    }
    Ok(label)
}

/// Drops the last `n_turns` merged turns.
pub fn truncate_ending(conversation: &Conversation, n_turns: usize) -> Result<Conversation, ConversationError> {
    let turns = merge_turns(conversation)?;
    if turns.len() <= n_turns {
        return Err(ConversationError::TooShort(conversation.id.clone()));
    }
    let kept = &turns[..turns.len() - n_turns];
    Ok(Conversation {
        id: conversation.id.clone(),
        outcome: conversation.outcome,
        utterances: flatten_turns(kept),
        metadata: conversation.metadata.clone(),
    })
}

/// Pairs successes with failures on utterance count.
///
/// Both sides are sorted by length, then an order-preserving assignment of the
/// shorter side into the longer one is chosen to minimise the total length gap.
/// In one dimension an order-preserving assignment is optimal, so the sorted
/// dynamic program finds the minimum-gap matching of size `min(|a|, |b|)`.
pub fn pair_by_length(
    successes: &[Conversation],
    failures: &[Conversation],
) -> Result<Vec<(Conversation, Conversation)>, ConversationError> {
    if successes.is_empty() || failures.is_empty() {
        return Err(ConversationError::EmptyCorpus);
    }
    let s = sorted_by_length(successes);
    let f = sorted_by_length(failures);
    let swap = s.len() > f.len();
    let (short, long) = if swap { (&f, &s) } else { (&s, &f) };
    let short_len: Vec<i64> = short.iter().map(|c| c.utterances.len() as i64).collect();
    let long_len: Vec<i64> = long.iter().map(|c| c.utterances.len() as i64).collect();
    let matched = monotone_assignment(&short_len, &long_len);
    Ok(matched
        .into_iter()
        .enumerate()
        .map(|(i, j)| {
            let (a, b) = (short[i].clone(), long[j].clone());
            if swap {
                (b, a)
            } else {
                (a, b)
            }
        })
        .collect())
}

fn sorted_by_length(corpus: &[Conversation]) -> Vec<&Conversation> {
    let mut v: Vec<&Conversation> = corpus.iter().collect();
    v.sort_by(|a, b| a.utterances.len().cmp(&b.utterances.len()).then_with(|| a.id.cmp(&b.id)));
    v
}

// Minimum total |short[i] - long[j]| over strictly increasing j-assignments.
// Ties prefer earlier (shorter) partners.
fn monotone_assignment(short: &[i64], long: &[i64]) -> Vec<usize> {
    let (n, m) = (short.len(), long.len());
    debug_assert!(n <= m);
    // cost[i][j]: best cost matching short[i..] into long[j..].
    let inf = i64::MAX / 4;
    let mut cost = vec![vec![inf; m + 1]; n + 1];
    cost[n].fill(0);
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            if m - j < n - i {
                continue;
            }
            let take = (short[i] - long[j]).abs() + cost[i + 1][j + 1];
            let skip = cost[i][j + 1];
            cost[i][j] = take.min(skip);
        }
    }
    let mut out = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < n {
        let take = (short[i] - long[j]).abs() + cost[i + 1][j + 1];
        if take == cost[i][j] {
            out.push(j);
            i += 1;
        }
        j += 1;
    }
    out
}

/// One moment per seeker turn; the context runs through that turn.
pub fn extract_moments(conversation_id: &str, turns: &[Turn]) -> Vec<Moment> {
    turns
        .iter()
        .enumerate()
        .filter(|(_, t)| t.role == Role::Seeker)
        .map(|(k, _)| Moment {
            conversation_id: conversation_id.to_string(),
            k,
            context: turns[..=k].to_vec(),
        })
        .collect()
}

/// Seconds between the seeker's last message in turn `k` and the responder's first reply.
pub fn response_time(turns: &[Turn], k: usize) -> Result<f64, ConversationError> {
    let seeker = turns.get(k).ok_or(ConversationError::NoReply(k))?;
    if seeker.role != Role::Seeker {
        return Err(ConversationError::NotSeekerTurn(k));
    }
    let reply = turns
        .get(k + 1)
        .filter(|t| t.role == Role::Responder)
        .ok_or(ConversationError::NoReply(k))?;
    let (asked, answered) = match (seeker.last_timestamp(), reply.first_timestamp()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(ConversationError::NoReply(k)),
    };
    if answered < asked {
        return Err(ConversationError::NegativeGap(k));
    }
    Ok((answered - asked) as f64 / 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(id: &str, roles: &[Role]) -> Conversation {
        Conversation {
            id: id.into(),
            outcome: Outcome::Unknown,
            utterances: roles
                .iter()
                .enumerate()
                .map(|(i, r)| Utterance::new(r.as_str(), *r, format!("msg {i}"), i as u64 * 1000))
                .collect(),
            metadata: BTreeMap::new(),
        }
    }

    fn alternating(id: &str, n: usize) -> Conversation {
        let roles: Vec<Role> = (0..n)
            .map(|i| if i % 2 == 0 { Role::Seeker } else { Role::Responder })
            .collect();
        conv(id, &roles)
    }

    use Role::{Responder as R, Seeker as S};

    #[test]
    fn parses_valid_line() {
        let line = r#"{"id":"c1","outcome":"success","utterances":[{"speaker":"t","role":"seeker","text":"hi","timestamp_ms":0},{"speaker":"c","role":"responder","text":"hello","timestamp_ms":10},{"speaker":"t","role":"seeker","text":"bye","timestamp_ms":20}]}"#;
        let corpus = parse_corpus(line.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus[0].utterances.len(), 3);
        assert!(corpus[0].has_real_timestamps());
    }

    #[test]
    fn missing_role_is_malformed() {
        let src = "\n{\"id\":\"c1\",\"outcome\":\"unknown\",\"utterances\":[{\"speaker\":\"t\",\"text\":\"hi\",\"timestamp_ms\":0}]}\n";
        match parse_corpus(src.as_bytes()) {
            Err(ConversationError::MalformedRecord { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected() {
        let line = r#"{"id":"c1","outcome":"unknown","utterances":[{"speaker":"t","role":"seeker","text":"hi","timestamp_ms":0}]}"#;
        let src = format!("{line}\n{line}\n");
        assert_eq!(
            parse_corpus(src.as_bytes()),
            Err(ConversationError::DuplicateId("c1".into()))
        );
    }

    #[test]
    fn empty_conversation_and_blank_text_rejected() {
        let empty = r#"{"id":"e","outcome":"unknown","utterances":[]}"#;
        assert_eq!(
            parse_corpus(empty.as_bytes()),
            Err(ConversationError::EmptyConversation("e".into()))
        );
        let blank = r#"{"id":"b","outcome":"unknown","utterances":[{"speaker":"t","role":"seeker","text":"   ","timestamp_ms":0}]}"#;
        assert!(matches!(
            parse_corpus(blank.as_bytes()),
            Err(ConversationError::MalformedRecord { line: 1, .. })
        ));
    }

    #[test]
    fn resorts_by_timestamp_and_fills_ordinals() {
        let line = r#"{"id":"c","outcome":"unknown","utterances":[{"speaker":"c","role":"responder","text":"b","timestamp_ms":50},{"speaker":"t","role":"seeker","text":"a","timestamp_ms":10}]}"#;
        let c = &parse_corpus(line.as_bytes()).unwrap()[0];
        assert_eq!(c.utterances[0].text, "a");

        let untimed = r#"{"id":"u","outcome":"unknown","utterances":[{"speaker":"t","role":"seeker","text":"a"},{"speaker":"c","role":"responder","text":"b"}]}"#;
        let c = &parse_corpus(untimed.as_bytes()).unwrap()[0];
        assert_eq!(c.utterances[1].timestamp_ms, 1);
        assert!(!c.has_real_timestamps());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let corpus = vec![alternating("a", 4), alternating("b", 3)];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).unwrap();
        assert_eq!(parse_corpus(buf.as_slice()).unwrap(), corpus);
    }

    #[test]
    fn merges_consecutive_roles() {
        let turns = merge_turns(&conv("c", &[S, S, R, S])).unwrap();
        let shape: Vec<(Role, usize)> = turns.iter().map(|t| (t.role, t.messages.len())).collect();
        assert_eq!(shape, vec![(S, 2), (R, 1), (S, 1)]);
        assert_eq!(turns.iter().map(|t| t.index).collect::<Vec<_>>(), vec![0, 1, 2]);

        let single = merge_turns(&conv("c", &[R])).unwrap();
        assert_eq!(single.len(), 1);

        assert_eq!(
            merge_turns(&conv("z", &[])),
            Err(ConversationError::EmptyConversation("z".into()))
        );
    }

    fn with_last(text: &str, role: Role) -> Conversation {
        let mut c = alternating("c", 2);
        c.utterances.push(Utterance::new("x", role, text, 99_000));
        c
    }

    #[test]
    fn disengagement_phrases() {
        let rules = DisengagementRules::default();
        let label = label_disengagement(
            &with_last("It seems like you may have stepped away from your phone.", R),
            &rules,
        )
        .unwrap();
        assert_eq!(label.outcome, Outcome::Disengaged);
        assert_eq!(label.trigger.as_deref(), Some("stepped away from your phone"));

        let label = label_disengagement(&with_last("I HAVEN\u{2019}T HEARD FROM YOU in a while.", R), &rules).unwrap();
        assert_eq!(label.trigger.as_deref(), Some("haven't heard from you"));

        let label = label_disengagement(&with_last("thank you", S), &rules).unwrap();
        assert_eq!(label, OutcomeLabel { outcome: Outcome::Unknown, trigger: None });

        let label = label_disengagement(&with_last("Are you still there?  ", R), &rules).unwrap();
        assert_eq!(label.outcome, Outcome::Disengaged);
        assert_eq!(label.trigger.as_deref(), Some("?"));

        let label = label_disengagement(&with_last("Take care. Goodbye.", R), &rules).unwrap();
        assert_eq!(label.outcome, Outcome::Unknown);
    }

    #[test]
    fn apply_label_keeps_survey_success() {
        let rules = DisengagementRules::default();
        let mut c = with_last("Are you there?", R);
        c.outcome = Outcome::Success;
        apply_label(&mut c, &rules).unwrap();
        assert_eq!(c.outcome, Outcome::Success);

        let mut c = with_last("Are you there?", R);
        apply_label(&mut c, &rules).unwrap();
        assert_eq!(c.outcome, Outcome::Disengaged);
        assert_eq!(c.metadata.get(TRIGGER_KEY).map(String::as_str), Some("?"));
    }

    #[test]
    fn truncation() {
        let c = alternating("c", 10);
        assert_eq!(merge_turns(&truncate_ending(&c, 3).unwrap()).unwrap().len(), 7);
        assert_eq!(truncate_ending(&c, 0).unwrap(), c);
        assert_eq!(
            truncate_ending(&alternating("s", 3), 3),
            Err(ConversationError::TooShort("s".into()))
        );
    }

    fn with_len(id: &str, n: usize) -> Conversation {
        alternating(id, n)
    }

    fn lens(pairs: &[(Conversation, Conversation)]) -> Vec<(usize, usize)> {
        pairs
            .iter()
            .map(|(a, b)| (a.utterances.len(), b.utterances.len()))
            .collect()
    }

    #[test]
    fn pairing_examples() {
        let p = pair_by_length(&[with_len("a", 10), with_len("b", 20)], &[with_len("c", 20), with_len("d", 10)]).unwrap();
        assert_eq!(lens(&p), vec![(10, 10), (20, 20)]);

        let p = pair_by_length(&[with_len("a", 10)], &[with_len("b", 12), with_len("c", 30)]).unwrap();
        assert_eq!(lens(&p), vec![(10, 12)]);

        // successes longer than failures keeps (success, failure) order
        let p = pair_by_length(&[with_len("b", 12), with_len("c", 30)], &[with_len("a", 10)]).unwrap();
        assert_eq!(lens(&p), vec![(12, 10)]);

        assert_eq!(pair_by_length(&[], &[with_len("a", 10)]), Err(ConversationError::EmptyCorpus));
    }

    #[test]
    fn moments_at_seeker_turns() {
        let ks = |roles: &[Role]| {
            let turns = merge_turns(&conv("c", roles)).unwrap();
            extract_moments("c", &turns).iter().map(|m| m.k).collect::<Vec<_>>()
        };
        assert_eq!(ks(&[S, R, S, R, S]), vec![0, 2, 4]);
        assert_eq!(ks(&[R, S]), vec![1]);
        assert!(ks(&[R]).is_empty());
    }

    fn timed_turns(seeker_ts: u64, responder_ts: u64) -> Vec<Turn> {
        turns_from_utterances(&[
            Utterance::new("t", S, "help", seeker_ts),
            Utterance::new("c", R, "here", responder_ts),
        ])
    }

    #[test]
    fn response_times() {
        assert!((response_time(&timed_turns(0, 102_030), 0).unwrap() - 102.03).abs() < 1e-12);
        assert_eq!(response_time(&timed_turns(5000, 5000), 0).unwrap(), 0.0);
        assert_eq!(
            response_time(&timed_turns(5000, 4000), 0),
            Err(ConversationError::NegativeGap(0))
        );
        let lone = turns_from_utterances(&[Utterance::new("t", S, "help", 0)]);
        assert_eq!(response_time(&lone, 0), Err(ConversationError::NoReply(0)));
    }
}
