//! Metric fixtures computed by a hand-counting script before the metric code
//! existed. Values are on the 0-100 scale except BLEU (0-1).

pub const SARI_FIXTURES: [(&str, &str, &[&str], f64); 6] = [
    ("a b c", "a b d", &["a b d"], 100.0),
    ("a b c", "a b c", &["a b d"], 37.22222222222222),
    ("x y z", "x y z", &["x y z"], 100.0),
    (
        "the cat sat on the mat",
        "the cat sat on a mat",
        &["the cat sat on a mat", "a cat sat on the mat"],
        63.313953488372086,
    ),
    (
        "he is a great musician and singer",
        "he is a musician and singer",
        &["he is a musician and singer", "he is a musician and vocalist"],
        83.92339544513457,
    ),
    ("a b c", "a b d", &["a b d", "a x d"], 86.30952380952381),
];

pub const GLEU_FIXTURES: [(&str, &str, &[&str], f64); 6] = [
    ("a b c d e", "a b x d e", &["a b x d e"], 100.0),
    ("x y q r s", "x y a b c d", &["a b c d"], 38.60973950960897),
    ("he go to school today", "he goes to school today", &["he goes to school today", "he went to school today"], 50.0),
    ("a b q d e", "a b c d e q", &["a b c d e"], 71.86082239261684),
    ("x y q r s", "y a b c d", &["a b c d e"], 62.23329772884784),
    ("a b c d e", "a b c d e", &["a b c d f e"], 0.0),
];

pub const BLEU_FIXTURES: [(&str, &str, f64); 5] = [
    ("a b c d", "a b c d", 1.0),
    ("the cat sat down", "the cat sat up", 0.6580370064762462),
    ("the cat", "the cat sat on the mat", 0.1353352832366127),
    ("a b c d", "a b x d", 0.49999999999999994),
    ("a b c", "x y z", 0.0),
];
