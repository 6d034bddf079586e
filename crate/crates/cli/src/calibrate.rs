use std::fs;

use anyhow::{Context, Result};
use edetect::procedures::calibrate_threshold;
use serde_json::json;

use crate::args::CalibrateArgs;
use crate::simulate::load;

pub fn run(args: CalibrateArgs) -> Result<()> {
    let cfg = load(&args.run)?;
    let request = cfg.calibration_request(args.target_arl)?;
    let text = match calibrate_threshold(&request) {
        Ok(report) => serde_json::to_string_pretty(&json!({ "status": "ok", "report": report }))?,
        Err(err @ edetect::Error::CalibrationFailed { target_arl, best_arl, best_threshold }) => {
            let failed = json!({
                "status": "failed",
                "target_arl": target_arl,
                "best_arl": best_arl,
                "best_threshold": best_threshold,
            });
            println!("{}", serde_json::to_string_pretty(&failed)?);
            return Err(err.into());
        }
        Err(err) => return Err(err.into()),
    };
    println!("{text}");
    if let Some(path) = args.out {
        fs::write(&path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
