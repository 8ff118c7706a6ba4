//! Rationale reports: expert-activation histograms and switch accuracy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backbone::Site;
use crate::bench::{BenchError, Sample, TaskCodec};
use crate::eaes::{segmented_means, ExpertiseMemoryBank};
use crate::editing::Editor;
use crate::segment::ExpertiseSegmentation;

/// Expert routing counts per wrap site plus the per-expert totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationHistogram {
    /// Site name ("encoder.N" / "decoder.N") -> selected-expert counts.
    pub per_site: BTreeMap<String, Vec<usize>>,
    /// Counts summed over sites.
    pub total: Vec<usize>,
    /// Number of routed segments (decoder tokens count as segments).
    pub routed_segments: usize,
}

fn site_name(site: Site) -> String {
    match site {
        Site::Encoder(l) => format!("encoder.{l}"),
        Site::Decoder(l) => format!("decoder.{l}"),
    }
}

/// Route every sample through the adapters (teacher-forced on the ground
/// truth) and count which experts each gate selected.
pub fn activation_histogram(
    editor: &Editor,
    codec: &TaskCodec,
    samples: &[Sample],
) -> Result<ActivationHistogram, BenchError> {
    let experts = editor
        .enc_adapter()
        .or(editor.dec_adapter())
        .map(|a| a.config.experts)
        .unwrap_or(0);
    let mut per_site: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut total = vec![0usize; experts];
    let mut routed = 0usize;
    for sample in samples {
        let prepared = crate::bench::prepare(sample.clone())?;
        let (src, seg) = codec.src_ids(&prepared)?;
        let tgt = codec.tgt_ids(codec.truth(sample))?;
        for record in editor.model.trace_routes(&src, &seg, &tgt)? {
            routed += 1;
            let bins = per_site
                .entry(site_name(record.site))
                .or_insert_with(|| vec![0; experts]);
            for &p in &record.selected {
                bins[p] += 1;
                total[p] += 1;
            }
        }
    }
    Ok(ActivationHistogram {
        per_site,
        total,
        routed_segments: routed,
    })
}

/// Switch confusion counts for one decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchCounts {
    pub edited_active: usize,
    pub edited_inactive: usize,
    pub unrelated_active: usize,
    pub unrelated_inactive: usize,
}

impl SwitchCounts {
    pub fn accuracy(&self) -> f64 {
        let correct = self.edited_active + self.unrelated_inactive;
        let total = self.edited_active
            + self.edited_inactive
            + self.unrelated_active
            + self.unrelated_inactive;
        correct as f64 / total.max(1) as f64
    }
}

/// Expertise-aware switch accuracy against the whole-input-mean rule on
/// the same labeled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub expertise: SwitchCounts,
    pub whole_input: SwitchCounts,
}

impl SwitchReport {
    /// Relative accuracy improvement of the expertise-aware rule.
    pub fn improvement(&self) -> f64 {
        let base = self.whole_input.accuracy();
        if base == 0.0 {
            return 0.0;
        }
        (self.expertise.accuracy() - base) / base
    }
}

/// Compare the expertise-aware rule of `editor` with a whole-input-mean
/// bank rebuilt from the same edit inputs at the same threshold. Edited
/// inputs should activate, unrelated ones should not.
pub fn switch_report(
    editor: &Editor,
    codec: &TaskCodec,
    edited: &[Sample],
    unrelated: &[Sample],
) -> Result<SwitchReport, BenchError> {
    let tau = editor.bank.tau;
    let mut whole_bank = ExpertiseMemoryBank::new(tau);
    for (i, sample) in edited.iter().enumerate() {
        let (src, seg) = encoded(codec, sample)?;
        let trace = editor.model.encode(&src, &seg, false)?;
        let whole = ExpertiseSegmentation::whole(seg.token_count, "input");
        let means = segmented_means(&trace.final_norm, &whole).map_err(crate::editing::EditingError::from)?;
        whole_bank
            .register_edit(i as u64, &means)
            .map_err(crate::editing::EditingError::from)?;
    }

    let mut expertise = SwitchCounts {
        edited_active: 0,
        edited_inactive: 0,
        unrelated_active: 0,
        unrelated_inactive: 0,
    };
    let mut whole_input = expertise;

    for (samples, is_edited) in [(edited, true), (unrelated, false)] {
        for sample in samples {
            let (src, seg) = encoded(codec, sample)?;
            let outcome = editor.route(&src, &seg)?;
            let trace = &outcome.unedited_trace;
            let whole = ExpertiseSegmentation::whole(seg.token_count, "input");
            let whole_means: Vec<_> = segmented_means(&trace.final_norm, &whole)
                .map_err(crate::editing::EditingError::from)?
                .into_iter()
                .map(|(_, m)| m)
                .collect();
            let whole_active = whole_bank.decide(&whole_means).active;
            match (is_edited, outcome.decision.active) {
                (true, true) => expertise.edited_active += 1,
                (true, false) => expertise.edited_inactive += 1,
                (false, true) => expertise.unrelated_active += 1,
                (false, false) => expertise.unrelated_inactive += 1,
            }
            match (is_edited, whole_active) {
                (true, true) => whole_input.edited_active += 1,
                (true, false) => whole_input.edited_inactive += 1,
                (false, true) => whole_input.unrelated_active += 1,
                (false, false) => whole_input.unrelated_inactive += 1,
            }
        }
    }

    Ok(SwitchReport {
        expertise,
        whole_input,
    })
}

fn encoded(
    codec: &TaskCodec,
    sample: &Sample,
) -> Result<(Vec<u32>, ExpertiseSegmentation), BenchError> {
    let prepared = crate::bench::prepare(sample.clone())?;
    codec.src_ids(&prepared)
}
