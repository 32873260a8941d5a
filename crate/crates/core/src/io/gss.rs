//! 1994 General Social Survey extract: educational attainment of 835 men
//! aged 25 to 60 in the workforce, by whether a parent holds a college
//! degree (`w = 1`).

use super::study_file::StudyFile;
use crate::model::ObservedStudy;

pub const GSS_LABELS: [&str; 5] = ["<HS", "HS", "AS", "BA", "GRAD"];
pub const GSS_CONTROL: [u64; 5] = [79, 378, 52, 112, 49];
pub const GSS_TREATED: [u64; 5] = [2, 46, 11, 65, 41];

/// The extract as a study file, one row per respondent.
pub const GSS_CSV: &str = include_str!("../../data/gss_1994.csv");

/// The extract as a study.
pub fn gss_dataset() -> ObservedStudy {
    ObservedStudy::from_arm_counts(&GSS_CONTROL, &GSS_TREATED)
        .and_then(|s| s.with_labels(GSS_LABELS.iter().map(|l| l.to_string()).collect()))
        .expect("embedded counts are valid")
}

/// The embedded file, parsed.
pub fn gss_study_file() -> StudyFile {
    StudyFile::parse(GSS_CSV).expect("embedded file parses")
}
