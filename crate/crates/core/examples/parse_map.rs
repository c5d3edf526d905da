//! Parse a map, print its derivative and evaluate both.

use ahlfors_lab::{Complex64, HoloMap};

fn main() -> ahlfors_lab::Result<()> {
    let source = std::env::args().nth(1).unwrap_or_else(|| "exp(z)/(z^2+1)".into());
    let hm = HoloMap::parse(&source)?;
    println!("f  = {}", hm.map.canonical());
    println!("f' = {}", hm.deriv.canonical());
    for z in [Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(0.0, 1.0)] {
        println!("z = {z}: f = {:?}, f' = {:?}", hm.eval(z), hm.eval_deriv(z));
    }
    Ok(())
}
