use sharpfront::kinetics::Kinetics;
use sharpfront::pde::{front_speed, simulate, InitialCondition, SimConfig};
use sharpfront::speed::{critical_speed, SpeedOptions};

fn speed(m: f64, r: f64, dx: f64) -> f64 {
    let cfg = SimConfig::new(m, 1.0, r, 40.0, dx, 25.0, InitialCondition::Step { x_front: 4.0, height: 1.0 });
    front_speed(&simulate(&Kinetics::fisher(), &cfg).unwrap(), 0.5).unwrap().speed
}

#[test]
fn halving_the_grid_barely_moves_the_speed() {
    let coarse = speed(2.0, 0.0, 0.1);
    let fine = speed(2.0, 0.0, 0.05);
    assert!(((coarse - fine) / fine).abs() < 5e-3, "{coarse} vs {fine}");
}

#[test]
fn delayed_front_is_slower_and_matches_shooting() {
    let plain = speed(2.0, 0.0, 0.05);
    let delayed = speed(2.0, 0.5, 0.05);
    assert!(delayed < plain, "{delayed} vs {plain}");
    let shot = critical_speed(&Kinetics::fisher(), 2.0, 1.0, 0.5, &SpeedOptions::with_tol(1e-6)).unwrap().c_star;
    assert!(((delayed - shot) / shot).abs() < 0.02, "{delayed} vs {shot}");
}

#[test]
fn intermediate_exponent_matches_shooting() {
    let measured = speed(1.5, 0.0, 0.05);
    let shot = critical_speed(&Kinetics::fisher(), 1.5, 1.0, 0.0, &SpeedOptions::with_tol(1e-6)).unwrap().c_star;
    assert!(((measured - shot) / shot).abs() < 0.02, "{measured} vs {shot}");
}
