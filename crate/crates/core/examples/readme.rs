//! The end-to-end snippet from the README, kept compiling.

use spin_transfer::channel::reduced_propagator_conserving;
use spin_transfer::dynamics::decompose;
use spin_transfer::hamiltonians::{build_single_excitation, ChainSpec};
use spin_transfer::measures::{fidelity, interference, reduced_interference_closed};

fn main() -> spin_transfer::Result<()> {
    let spec = ChainSpec::xy_weak_ends(8, 1.0, 0.02);
    let u = decompose(&build_single_excitation(&spec)?)?;

    let t = 120.0;
    let amps = u.amplitudes(t);
    let channel = reduced_propagator_conserving(&u, t)?;

    println!("aligned fidelity   = {}", fidelity(&amps, true));
    println!(
        "reduced interference (closed form) = {}",
        reduced_interference_closed(&amps, true)
    );
    println!("reduced interference (channel)     = {}", interference(&channel));
    Ok(())
}
