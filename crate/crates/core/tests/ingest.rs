use std::io::Cursor;

use sparsedit::ingest::{
    detect_format, filter_comment, ingest, CommentDisposition, DropReason, DumpFormat, FilterConfig, IngestStats,
    SentencePair, BLACKLIST, SHORTCUTS,
};

const DUMP: &str = include_str!("fixtures/three_pages.xml");
const GOLDEN_PAIRS: &str = include_str!("fixtures/three_pages.pairs.jsonl");
const GOLDEN_STATS: &str = include_str!("fixtures/three_pages.stats.json");

fn run(dump: &str) -> (String, IngestStats) {
    let mut reader = Cursor::new(dump.as_bytes());
    let format = detect_format(&mut reader).unwrap();
    let mut out = String::new();
    let stats = ingest(reader, format, &FilterConfig::default(), |p| {
        out.push_str(&serde_json::to_string(p).unwrap());
        out.push('\n');
        Ok(())
    })
    .unwrap();
    (out, stats)
}

#[test]
fn three_page_dump_matches_golden_files() {
    let (pairs, stats) = run(DUMP);
    assert_eq!(pairs, GOLDEN_PAIRS);
    let golden: IngestStats = serde_json::from_str(GOLDEN_STATS).unwrap();
    assert_eq!(stats, golden);
    assert_eq!(stats.revisions, stats.revisions_kept + stats.revisions_dropped_total());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let first = run(DUMP);
    for _ in 0..3 {
        assert_eq!(run(DUMP), first);
    }
}

#[test]
fn jsonl_dump_gives_the_same_pairs() {
    let mut reader = Cursor::new(DUMP.as_bytes());
    assert_eq!(detect_format(&mut reader).unwrap(), DumpFormat::Xml);
    let pages: Vec<_> = sparsedit::ingest::stream_pages(reader, DumpFormat::Xml).map(Result::unwrap).collect();
    let mut jsonl = String::new();
    for p in &pages {
        for r in &p.revisions {
            jsonl.push_str(&serde_json::to_string(r).unwrap());
            jsonl.push('\n');
        }
    }
    assert_eq!(run(&jsonl).0, GOLDEN_PAIRS);
}

#[test]
fn empty_dump_gives_zero_stats() {
    let (pairs, stats) = run("");
    assert!(pairs.is_empty());
    assert_eq!(stats, IngestStats::default());
    let (pairs, stats) = run("<mediawiki></mediawiki>");
    assert!(pairs.is_empty());
    assert_eq!(stats, IngestStats::default());
}

#[test]
fn every_blacklist_term_drops() {
    assert_eq!(BLACKLIST.len(), 12);
    for term in BLACKLIST {
        for comment in [term.to_string(), format!("fixed {} here", term.to_uppercase())] {
            assert_eq!(
                filter_comment(&comment),
                CommentDisposition::Drop(DropReason::Blacklist(term)),
                "{comment}"
            );
        }
    }
}

#[test]
fn shortcut_expansions() {
    let expected = [
        ("[[WP:NPOV|POV]]", "neutral point of view"),
        ("[[WP:TYPO]]", "typo"),
        ("[[WP:RS]]", "reliable sources"),
        ("[[WP:SYN]]", "synthesis"),
    ];
    assert_eq!(SHORTCUTS, expected);
    for (short, long) in expected {
        assert_eq!(filter_comment(short), CommentDisposition::Keep(long.to_string()));
        assert_eq!(
            filter_comment(&format!("per {short} rules")),
            CommentDisposition::Keep(format!("per {long} rules"))
        );
    }
}

#[test]
fn kept_pairs_parse_back() {
    for line in GOLDEN_PAIRS.lines() {
        let p: SentencePair = serde_json::from_str(line).unwrap();
        assert_ne!(p.source, p.target);
        assert!(p.intent.is_none());
    }
}
