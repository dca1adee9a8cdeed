use std::path::Path;

use crate::evaluate::{read_matrix, write_afc_outputs, write_seg_outputs, AfcRow, SegRow, AFC_TRIALS, DISTANCE_MATRIX, SEG_TRIALS};

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<T>, _>>()?)
}

/// Recomputes summaries, reports and plots from whichever trial CSVs `dir` holds.
pub fn report(dir: &Path) -> anyhow::Result<()> {
    let mut any = false;
    let afc = dir.join(AFC_TRIALS);
    if afc.exists() {
        write_afc_outputs(dir, &read_rows::<AfcRow>(&afc)?)?;
        any = true;
    }
    let seg = dir.join(SEG_TRIALS);
    if seg.exists() {
        let matrix = dir.join(DISTANCE_MATRIX);
        let m = if matrix.exists() { Some(read_matrix(&matrix)?) } else { None };
        write_seg_outputs(dir, &read_rows::<SegRow>(&seg)?, m.as_ref().map(|(i, m)| (i.as_slice(), m.as_slice())))?;
        any = true;
    }
    if !any {
        return Err(fishtank::Error::Data(format!("{} holds neither {AFC_TRIALS} nor {SEG_TRIALS}", dir.display())).into());
    }
    Ok(())
}
