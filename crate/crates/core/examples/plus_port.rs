use num_complex::Complex64;
use pathread_core::cavity::{pointer_pair, DriveTone, Path};
use pathread_core::interference::{combine_pairs, InterferenceSetting};
use pathread_core::presets;

fn main() -> pathread_core::Result<()> {
    let dev = presets::device("Q2")?;
    let c = dev.cavity()?;
    let drive = DriveTone::at_detuning(&c, 0.0, Complex64::new(1.0, 0.0))?;
    let t = pointer_pair(&c, &drive, Path::Transmission);
    let r = pointer_pair(&c, &drive, Path::Reflection);
    let plus = combine_pairs(&t, &r, &InterferenceSetting::plus(dev.theta_rt));
    println!("D_T = {:.4}, D_plus = {:.4}", t.distance, plus.distance);
    Ok(())
}
