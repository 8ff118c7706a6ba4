// calibration: switch similarity margins per task
use moledit::config::RunConfig;
use moledit::editing::{AblationFlags, Task};
use moledit::pipeline::{run_pipeline};
use moledit::bench::prepare;

fn main() {
    let mut run = RunConfig::default();
    run.corpus.size = 200;
    run.model.d_model = 48;
    run.model.n_enc_layers = 3;
    run.model.n_dec_layers = 3;
    run.model.d_ffn = 96;
    run.pretrain.lr = 2e-3;
    run.pretrain.epochs = 100;
    run.bench.edit_size = 10;
    run.edit.lr_caption = 5e-3;
    run.edit.lr_molecule = 5e-3;
    run.edit.steps = 200;
    run.edit.early_stop_loss = 2e-2;
    run.edit.max_edits = 10;

    for task in [Task::CaptionGen, Task::MoleculeGen] {
        let out = match run_pipeline(&run, task, AblationFlags::default()) {
            Ok(o) => o, Err(e) => { println!("{task:?} FAILED: {e}"); continue; }
        };
        println!("== {task:?}: pretrain loss {:.4}, edit {} loc {} gen {}",
            out.pretrain_log.last().unwrap(), out.split.edit.len(), out.split.locality.len(), out.split.generality.len());
        let margin = |sample: &moledit::bench::Sample, use_cap_text: bool| -> f64 {
            let p = prepare(sample.clone()).unwrap();
            let (src, seg) = if use_cap_text {
                out.codec.src_ids_from_text(&sample.caption).unwrap()
            } else {
                out.codec.src_ids(&p).unwrap()
            };
            let o = out.editor.route(&src, &seg).unwrap();
            o.decision.best_similarities.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        let edits: Vec<f64> = out.split.edit.iter().map(|s| margin(s, false)).collect();
        let locs: Vec<f64> = out.split.locality.iter().map(|s| margin(s, false)).collect();
        let gens: Vec<f64> = out.split.generality.iter().map(|s| margin(s, true)).collect();
        let fmt = |v: &[f64]| -> String {
            if v.is_empty() { return "-".into(); }
            let mut s = v.to_vec(); s.sort_by(|a,b| a.partial_cmp(b).unwrap());
            format!("min {:.4} med {:.4} max {:.4}", s[0], s[s.len()/2], s[s.len()-1])
        };
        println!("   edited:    {}", fmt(&edits));
        println!("   locality:  {}", fmt(&locs));
        println!("   generality:{}", fmt(&gens));
    }
}
