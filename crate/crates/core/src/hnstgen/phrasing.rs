//! Question paraphrase pools and the fixed answer strings for deceptive
//! questions. Every pool has at least five entries; one is drawn per sample.

use rand::Rng;

/// Fifth option on every single-choice question; the gold answer when the
/// queried object is not in the image.
pub const NONE_OPTION: &str = "None of the above — the object is not present in the image";

pub fn refusal_absent(category: &str) -> String {
    format!("There is no {category} in the image, so its color cannot be determined.")
}

pub fn refusal_panchromatic(category: &str) -> String {
    format!("This is a panchromatic image, so the color of the {category} cannot be determined.")
}

pub const PRESENCE: [&str; 6] = [
    "Is there a {a} in the image?",
    "Does the image contain a {a}?",
    "Can you see any {a} in this image?",
    "Is a {a} present in this remote sensing image?",
    "Are there any {a} objects visible in the image?",
    "Does a {a} appear anywhere in this scene?",
];

pub const COLOR: [&str; 6] = [
    "What is the color of the {a} in the image?",
    "What color is the {a}?",
    "Describe the color of the {a} in this image.",
    "Which color does the {a} in the image have?",
    "Tell me the color of the {a} shown in the image.",
    "What color is the {a} in this remote sensing image?",
];

pub const ABSOLUTE: [&str; 6] = [
    "Where is the {a} located in the image?",
    "In which part of the image is the {a}?",
    "Which region of the image contains the {a}?",
    "Where in the image can the {a} be found?",
    "What is the position of the {a} in the image?",
    "Locate the {a} in the image.",
];

pub const RELATIVE: [&str; 6] = [
    "Where is the {a} located relative to the {b}?",
    "What is the position of the {a} relative to the {b}?",
    "In which direction is the {a} from the {b}?",
    "Relative to the {b}, where is the {a}?",
    "How is the {a} positioned with respect to the {b}?",
    "Where can the {a} be found in relation to the {b}?",
];

pub fn phrase<R: Rng>(pool: &[&str], a: &str, b: &str, rng: &mut R) -> String {
    pool[rng.gen_range(0..pool.len())].replace("{a}", a).replace("{b}", b)
}
