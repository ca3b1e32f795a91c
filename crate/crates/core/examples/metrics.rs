//! Confusion counts, ACC/SEN/SPE/MCC at the 0.5 threshold, and the ROC curve.

use acpclass::eval::{confusion, metrics, roc_auc};
use acpclass::seqdata::Label;

fn main() -> acpclass::Result<()> {
    let scores = [0.95, 0.8, 0.7, 0.55, 0.5, 0.45, 0.3, 0.2, 0.1, 0.6];
    let labels: Vec<Label> = [1, 1, 0, 1, 0, 1, 0, 0, 0, 1]
        .iter()
        .map(|&l| Label::from_u8(l).expect("0 or 1"))
        .collect();
    let c = confusion(&scores, &labels, 0.5)?;
    let m = metrics(&c)?;
    println!("{c:?}");
    println!("ACC {:.3} SEN {:.3} SPE {:.3} MCC {:.3}", m.acc, m.sen, m.spe, m.mcc);
    let roc = roc_auc(&scores, &labels)?;
    for p in &roc.points {
        println!("threshold {:>5} fpr {:.2} tpr {:.2}", format!("{:.2}", p.threshold), p.fpr, p.tpr);
    }
    println!("AUC {:.4}", roc.auc);
    Ok(())
}
