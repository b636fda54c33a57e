//! Verb inflection lexicon with regular-suffix fallback.
//!
//! Each lexicon row lists `VB VBD VBG VBN VBZ`. Rows with regular spelling
//! are generated from a lemma list; irregular verbs and verbs whose final
//! consonant doubles are spelled out.

use super::tags::VerbForm;

const IRREGULAR: &[[&str; 5]] = &[
    ["be", "was", "being", "been", "is"],
    ["have", "had", "having", "had", "has"],
    ["do", "did", "doing", "done", "does"],
    ["go", "went", "going", "gone", "goes"],
    ["say", "said", "saying", "said", "says"],
    ["make", "made", "making", "made", "makes"],
    ["get", "got", "getting", "gotten", "gets"],
    ["know", "knew", "knowing", "known", "knows"],
    ["take", "took", "taking", "taken", "takes"],
    ["see", "saw", "seeing", "seen", "sees"],
    ["come", "came", "coming", "come", "comes"],
    ["think", "thought", "thinking", "thought", "thinks"],
    ["give", "gave", "giving", "given", "gives"],
    ["find", "found", "finding", "found", "finds"],
    ["tell", "told", "telling", "told", "tells"],
    ["become", "became", "becoming", "become", "becomes"],
    ["leave", "left", "leaving", "left", "leaves"],
    ["feel", "felt", "feeling", "felt", "feels"],
    ["bring", "brought", "bringing", "brought", "brings"],
    ["begin", "began", "beginning", "begun", "begins"],
    ["keep", "kept", "keeping", "kept", "keeps"],
    ["hold", "held", "holding", "held", "holds"],
    ["write", "wrote", "writing", "written", "writes"],
    ["stand", "stood", "standing", "stood", "stands"],
    ["hear", "heard", "hearing", "heard", "hears"],
    ["let", "let", "letting", "let", "lets"],
    ["mean", "meant", "meaning", "meant", "means"],
    ["set", "set", "setting", "set", "sets"],
    ["meet", "met", "meeting", "met", "meets"],
    ["run", "ran", "running", "run", "runs"],
    ["pay", "paid", "paying", "paid", "pays"],
    ["sit", "sat", "sitting", "sat", "sits"],
    ["speak", "spoke", "speaking", "spoken", "speaks"],
    ["lie", "lay", "lying", "lain", "lies"],
    ["lead", "led", "leading", "led", "leads"],
    ["read", "read", "reading", "read", "reads"],
    ["grow", "grew", "growing", "grown", "grows"],
    ["lose", "lost", "losing", "lost", "loses"],
    ["fall", "fell", "falling", "fallen", "falls"],
    ["send", "sent", "sending", "sent", "sends"],
    ["build", "built", "building", "built", "builds"],
    ["understand", "understood", "understanding", "understood", "understands"],
    ["draw", "drew", "drawing", "drawn", "draws"],
    ["break", "broke", "breaking", "broken", "breaks"],
    ["spend", "spent", "spending", "spent", "spends"],
    ["cut", "cut", "cutting", "cut", "cuts"],
    ["rise", "rose", "rising", "risen", "rises"],
    ["drive", "drove", "driving", "driven", "drives"],
    ["buy", "bought", "buying", "bought", "buys"],
    ["wear", "wore", "wearing", "worn", "wears"],
    ["choose", "chose", "choosing", "chosen", "chooses"],
    ["seek", "sought", "seeking", "sought", "seeks"],
    ["throw", "threw", "throwing", "thrown", "throws"],
    ["catch", "caught", "catching", "caught", "catches"],
    ["deal", "dealt", "dealing", "dealt", "deals"],
    ["win", "won", "winning", "won", "wins"],
    ["forget", "forgot", "forgetting", "forgotten", "forgets"],
    ["lay", "laid", "laying", "laid", "lays"],
    ["sell", "sold", "selling", "sold", "sells"],
    ["fight", "fought", "fighting", "fought", "fights"],
    ["eat", "ate", "eating", "eaten", "eats"],
    ["teach", "taught", "teaching", "taught", "teaches"],
    ["put", "put", "putting", "put", "puts"],
    ["show", "showed", "showing", "shown", "shows"],
    ["sing", "sang", "singing", "sung", "sings"],
    ["drink", "drank", "drinking", "drunk", "drinks"],
    ["swim", "swam", "swimming", "swum", "swims"],
    ["ring", "rang", "ringing", "rung", "rings"],
    ["fly", "flew", "flying", "flown", "flies"],
    ["hide", "hid", "hiding", "hidden", "hides"],
    ["ride", "rode", "riding", "ridden", "rides"],
    ["shake", "shook", "shaking", "shaken", "shakes"],
    ["steal", "stole", "stealing", "stolen", "steals"],
    ["strike", "struck", "striking", "struck", "strikes"],
    ["swear", "swore", "swearing", "sworn", "swears"],
    ["tear", "tore", "tearing", "torn", "tears"],
    ["wake", "woke", "waking", "woken", "wakes"],
    ["freeze", "froze", "freezing", "frozen", "freezes"],
    ["bite", "bit", "biting", "bitten", "bites"],
    ["blow", "blew", "blowing", "blown", "blows"],
    ["hang", "hung", "hanging", "hung", "hangs"],
    ["shoot", "shot", "shooting", "shot", "shoots"],
    ["shut", "shut", "shutting", "shut", "shuts"],
    ["sleep", "slept", "sleeping", "slept", "sleeps"],
    ["slide", "slid", "sliding", "slid", "slides"],
    ["spin", "spun", "spinning", "spun", "spins"],
    ["split", "split", "splitting", "split", "splits"],
    ["spread", "spread", "spreading", "spread", "spreads"],
    ["stick", "stuck", "sticking", "stuck", "sticks"],
    ["sting", "stung", "stinging", "stung", "stings"],
    ["swing", "swung", "swinging", "swung", "swings"],
    ["bear", "bore", "bearing", "borne", "bears"],
    ["beat", "beat", "beating", "beaten", "beats"],
    ["bend", "bent", "bending", "bent", "bends"],
    ["bet", "bet", "betting", "bet", "bets"],
    ["bind", "bound", "binding", "bound", "binds"],
    ["bleed", "bled", "bleeding", "bled", "bleeds"],
    ["breed", "bred", "breeding", "bred", "breeds"],
    ["burst", "burst", "bursting", "burst", "bursts"],
    ["cast", "cast", "casting", "cast", "casts"],
    ["cling", "clung", "clinging", "clung", "clings"],
    ["cost", "cost", "costing", "cost", "costs"],
    ["creep", "crept", "creeping", "crept", "creeps"],
    ["dig", "dug", "digging", "dug", "digs"],
    ["feed", "fed", "feeding", "fed", "feeds"],
    ["flee", "fled", "fleeing", "fled", "flees"],
    ["forbid", "forbade", "forbidding", "forbidden", "forbids"],
    ["forgive", "forgave", "forgiving", "forgiven", "forgives"],
    ["grind", "ground", "grinding", "ground", "grinds"],
    ["hit", "hit", "hitting", "hit", "hits"],
    ["hurt", "hurt", "hurting", "hurt", "hurts"],
    ["kneel", "knelt", "kneeling", "knelt", "kneels"],
    ["lend", "lent", "lending", "lent", "lends"],
    ["light", "lit", "lighting", "lit", "lights"],
    ["quit", "quit", "quitting", "quit", "quits"],
    ["shine", "shone", "shining", "shone", "shines"],
    ["shrink", "shrank", "shrinking", "shrunk", "shrinks"],
    ["sink", "sank", "sinking", "sunk", "sinks"],
    ["slay", "slew", "slaying", "slain", "slays"],
    ["speed", "sped", "speeding", "sped", "speeds"],
    ["spit", "spat", "spitting", "spat", "spits"],
    ["spring", "sprang", "springing", "sprung", "springs"],
    ["stink", "stank", "stinking", "stunk", "stinks"],
    ["stride", "strode", "striding", "stridden", "strides"],
    ["string", "strung", "stringing", "strung", "strings"],
    ["strive", "strove", "striving", "striven", "strives"],
    ["sweep", "swept", "sweeping", "swept", "sweeps"],
    ["swell", "swelled", "swelling", "swollen", "swells"],
    ["undergo", "underwent", "undergoing", "undergone", "undergoes"],
    ["undertake", "undertook", "undertaking", "undertaken", "undertakes"],
    ["weave", "wove", "weaving", "woven", "weaves"],
    ["weep", "wept", "weeping", "wept", "weeps"],
    ["wind", "wound", "winding", "wound", "winds"],
    ["withdraw", "withdrew", "withdrawing", "withdrawn", "withdraws"],
    ["overcome", "overcame", "overcoming", "overcome", "overcomes"],
    ["arise", "arose", "arising", "arisen", "arises"],
    ["awake", "awoke", "awaking", "awoken", "awakes"],
    ["forecast", "forecast", "forecasting", "forecast", "forecasts"],
    ["upset", "upset", "upsetting", "upset", "upsets"],
    ["prove", "proved", "proving", "proven", "proves"],
    ["learn", "learned", "learning", "learned", "learns"],
    ["stop", "stopped", "stopping", "stopped", "stops"],
    ["plan", "planned", "planning", "planned", "plans"],
    ["drop", "dropped", "dropping", "dropped", "drops"],
    ["ship", "shipped", "shipping", "shipped", "ships"],
    ["admit", "admitted", "admitting", "admitted", "admits"],
    ["commit", "committed", "committing", "committed", "commits"],
    ["prefer", "preferred", "preferring", "preferred", "prefers"],
    ["refer", "referred", "referring", "referred", "refers"],
    ["occur", "occurred", "occurring", "occurred", "occurs"],
    ["control", "controlled", "controlling", "controlled", "controls"],
    ["permit", "permitted", "permitting", "permitted", "permits"],
    ["submit", "submitted", "submitting", "submitted", "submits"],
    ["grab", "grabbed", "grabbing", "grabbed", "grabs"],
    ["hug", "hugged", "hugging", "hugged", "hugs"],
    ["beg", "begged", "begging", "begged", "begs"],
    ["nod", "nodded", "nodding", "nodded", "nods"],
    ["rob", "robbed", "robbing", "robbed", "robs"],
    ["chat", "chatted", "chatting", "chatted", "chats"],
    ["die", "died", "dying", "died", "dies"],
    ["tie", "tied", "tying", "tied", "ties"],
    ["study", "studied", "studying", "studied", "studies"],
    ["try", "tried", "trying", "tried", "tries"],
    ["carry", "carried", "carrying", "carried", "carries"],
    ["marry", "married", "marrying", "married", "marries"],
    ["worry", "worried", "worrying", "worried", "worries"],
    ["apply", "applied", "applying", "applied", "applies"],
    ["reply", "replied", "replying", "replied", "replies"],
    ["rely", "relied", "relying", "relied", "relies"],
];

/// Verbs whose five forms follow the regular suffix rules.
const REGULAR: &[&str] = &[
    "ask", "work", "call", "need", "want", "look", "use", "seem", "help", "talk", "turn", "start",
    "play", "move", "live", "believe", "happen", "include", "continue", "change", "watch",
    "follow", "create", "open", "walk", "offer", "remember", "love", "consider", "appear", "wait",
    "serve", "die", "expect", "stay", "reach", "kill", "remain", "suggest", "raise", "pass",
    "report", "decide", "pull", "return", "explain", "hope", "develop", "receive", "agree",
    "support", "produce", "add", "allow", "like", "join", "reduce", "establish", "fix",
    "improve", "edit", "correct", "remove", "replace", "describe", "require", "form", "claim",
    "publish", "record", "release", "announce", "retire", "complete", "attend", "design",
    "visit", "arrive", "listen", "enjoy", "share", "clean", "cook", "dance", "jump", "laugh",
    "paint", "pick", "push", "smile", "touch", "travel", "wash", "wish", "kick", "finish",
    "order", "answer", "close", "cover", "enter", "fill", "hate", "increase", "miss", "name",
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn consonant_y(s: &str) -> bool {
    let cs: Vec<char> = s.chars().collect();
    cs.len() >= 2 && cs[cs.len() - 1] == 'y' && !is_vowel(cs[cs.len() - 2])
}

/// Regular spelling of `form` for `lemma`.
pub fn regular_form(lemma: &str, form: VerbForm) -> String {
    match form {
        VerbForm::Vb => lemma.to_string(),
        VerbForm::Vbz => {
            if ["s", "x", "z", "ch", "sh", "o"].iter().any(|e| lemma.ends_with(e)) {
                format!("{lemma}es")
            } else if consonant_y(lemma) {
                format!("{}ies", &lemma[..lemma.len() - 1])
            } else {
                format!("{lemma}s")
            }
        }
        VerbForm::Vbd | VerbForm::Vbn => {
            if lemma.ends_with('e') {
                format!("{lemma}d")
            } else if consonant_y(lemma) {
                format!("{}ied", &lemma[..lemma.len() - 1])
            } else {
                format!("{lemma}ed")
            }
        }
        VerbForm::Vbg => {
            if let Some(stem) = lemma.strip_suffix("ie") {
                format!("{stem}ying")
            } else if lemma.ends_with('e')
                && !lemma.ends_with("ee")
                && !lemma.ends_with("ye")
                && !lemma.ends_with("oe")
                && lemma.len() > 2
            {
                format!("{}ing", &lemma[..lemma.len() - 1])
            } else {
                format!("{lemma}ing")
            }
        }
    }
}

fn form_index(form: VerbForm) -> usize {
    match form {
        VerbForm::Vb => 0,
        VerbForm::Vbd => 1,
        VerbForm::Vbg => 2,
        VerbForm::Vbn => 3,
        VerbForm::Vbz => 4,
    }
}

/// Lexicon entries in lookup order: irregular table first, then generated rows.
fn lexicon() -> &'static [[String; 5]] {
    use std::sync::OnceLock;
    static LEX: OnceLock<Vec<[String; 5]>> = OnceLock::new();
    LEX.get_or_init(|| {
        let mut rows: Vec<[String; 5]> = IRREGULAR
            .iter()
            .map(|r| r.map(|s| s.to_string()))
            .collect();
        for lemma in REGULAR {
            if rows.iter().any(|r| r[0] == *lemma) {
                continue;
            }
            rows.push(VerbForm::ALL.map(|f| regular_form(lemma, f)));
        }
        rows
    })
}

/// Number of lexicon rows.
pub fn lexicon_size() -> usize {
    lexicon().len()
}

fn is_lexicon_lemma(lemma: &str) -> bool {
    lexicon().iter().any(|r| r[0] == lemma)
}

/// Candidate lemmas of `word` if it were a regular `form`, most specific first.
fn regular_lemma_candidates(word: &str, form: VerbForm) -> Vec<String> {
    let mut c = Vec::new();
    match form {
        VerbForm::Vb => c.push(word.to_string()),
        VerbForm::Vbz => {
            if let Some(stem) = word.strip_suffix("ies") {
                c.push(format!("{stem}y"));
            }
            if let Some(stem) = word.strip_suffix("es") {
                c.push(stem.to_string());
            }
            if let Some(stem) = word.strip_suffix('s') {
                c.push(stem.to_string());
            }
        }
        VerbForm::Vbd | VerbForm::Vbn => {
            if let Some(stem) = word.strip_suffix("ied") {
                c.push(format!("{stem}y"));
            }
            if let Some(stem) = word.strip_suffix('d') {
                c.push(stem.to_string());
            }
            if let Some(stem) = word.strip_suffix("ed") {
                c.push(stem.to_string());
            }
        }
        VerbForm::Vbg => {
            if let Some(stem) = word.strip_suffix("ying") {
                c.push(format!("{stem}ie"));
            }
            if let Some(stem) = word.strip_suffix("ing") {
                c.push(format!("{stem}e"));
                c.push(stem.to_string());
            }
        }
    }
    c.retain(|l| l.chars().count() >= 2 && l.chars().all(|ch| ch.is_ascii_lowercase()));
    c
}

fn restore_case(pattern: &str, word: &str) -> String {
    let mut pc = pattern.chars();
    let first_upper = pc.next().is_some_and(char::is_uppercase);
    let all_upper = pattern.chars().count() > 1 && pattern.chars().all(|c| !c.is_lowercase());
    if all_upper {
        word.to_uppercase()
    } else if first_upper {
        let mut cs = word.chars();
        match cs.next() {
            Some(f) => f.to_uppercase().chain(cs).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

/// Re-inflects `word`, read as verb form `from`, into form `to`.
///
/// Returns `None` when `word` is not recognized as `from` or the result
/// equals the input.
pub fn inflect(word: &str, from: VerbForm, to: VerbForm) -> Option<String> {
    if from == to {
        return None;
    }
    let lower = word.to_lowercase();
    let (fi, ti) = (form_index(from), form_index(to));
    let found = lexicon()
        .iter()
        .find(|r| r[fi] == lower)
        .map(|r| r[ti].clone())
        .or_else(|| {
            regular_lemma_candidates(&lower, from)
                .into_iter()
                .filter(|l| !is_lexicon_lemma(l))
                .find(|l| regular_form(l, from) == lower)
                .map(|l| regular_form(&l, to))
        })?;
    let out = restore_case(word, &found);
    (out != word).then_some(out)
}

/// First `(from, to)` pair in listing order that maps `src` to `tgt`.
pub fn detect_verb_change(src: &str, tgt: &str) -> Option<(VerbForm, VerbForm)> {
    for from in VerbForm::ALL {
        for to in VerbForm::ALL {
            if from != to && inflect(src, from, to).as_deref() == Some(tgt) {
                return Some((from, to));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_is_about_two_hundred() {
        let n = lexicon_size();
        assert!((150..=300).contains(&n), "{n}");
    }

    #[test]
    fn irregular_lookup() {
        assert_eq!(inflect("went", VerbForm::Vbd, VerbForm::Vb).as_deref(), Some("go"));
        assert_eq!(inflect("is", VerbForm::Vbz, VerbForm::Vbd).as_deref(), Some("was"));
        assert_eq!(inflect("Ran", VerbForm::Vbd, VerbForm::Vbz).as_deref(), Some("Runs"));
    }

    #[test]
    fn regular_suffixes() {
        assert_eq!(inflect("use", VerbForm::Vb, VerbForm::Vbz).as_deref(), Some("uses"));
        assert_eq!(inflect("learn", VerbForm::Vb, VerbForm::Vbd).as_deref(), Some("learned"));
        assert_eq!(inflect("walked", VerbForm::Vbd, VerbForm::Vbg).as_deref(), Some("walking"));
        // unknown verb, heuristic path
        assert_eq!(inflect("blorps", VerbForm::Vbz, VerbForm::Vbd).as_deref(), Some("blorped"));
        assert_eq!(inflect("hurried", VerbForm::Vbd, VerbForm::Vb).as_deref(), Some("hurry"));
    }

    #[test]
    fn no_change_is_not_a_transform() {
        assert_eq!(inflect("walked", VerbForm::Vbd, VerbForm::Vbn), None);
        assert_eq!(inflect("put", VerbForm::Vb, VerbForm::Vbd), None);
    }

    #[test]
    fn detection() {
        assert_eq!(detect_verb_change("are", "is"), None);
        assert_eq!(detect_verb_change("use", "uses"), Some((VerbForm::Vb, VerbForm::Vbz)));
        assert_eq!(detect_verb_change("learn", "learned"), Some((VerbForm::Vb, VerbForm::Vbd)));
        assert_eq!(detect_verb_change("dog", "cat"), None);
    }
}
