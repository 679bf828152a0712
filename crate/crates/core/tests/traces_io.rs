use std::io::Cursor;

use greencoop::traces::{discretize, parse_trace, stats, synthesize_profile, write_trace, LoadProfile, LoadTrace};
use greencoop::Error;

#[test]
fn synthesized_trace_survives_a_file_round_trip() {
    let profile = synthesize_profile(0.221, 5, 168.0).unwrap();
    let samples = profile.knots().iter().map(|&t| (t, profile.value(t))).collect();
    let trace = LoadTrace::new(samples, 168.0).unwrap();
    assert_eq!(trace.samples.len(), 336);
    let mut buf = Vec::new();
    write_trace(&mut buf, &trace).unwrap();
    let back = parse_trace(Cursor::new(buf), 168.0).unwrap();
    assert_eq!(back, trace);
    let refit = LoadProfile::fit(&back).unwrap();
    assert!((stats(&refit).mean_hourly - stats(&profile).mean_hourly).abs() < 1e-6);
}

#[test]
fn comments_and_whitespace_are_tolerated() {
    let text = "# weekly trace\ntime_hours,load\n0, 0.1\n# gap\n1,0.2\n 2 ,0.3\n3,0.4\n";
    let trace = parse_trace(Cursor::new(text), 4.0).unwrap();
    assert_eq!(trace.samples, vec![(0.0, 0.1), (1.0, 0.2), (2.0, 0.3), (3.0, 0.4)]);
}

#[test]
fn errors_carry_line_numbers() {
    let text = "time_hours,load\n0,0.1\n1,0.2\n1,0.3\n3,0.4\n";
    let err = parse_trace(Cursor::new(text), 4.0).unwrap_err();
    assert!(err.to_string().contains("strictly increasing") || matches!(err, Error::TraceParse { .. }), "{err}");
    let err = parse_trace(Cursor::new("time_hours,load\n0,0.1\n1,abc\n"), 4.0).unwrap_err();
    assert!(matches!(err, Error::TraceParse { line: 3, .. }), "{err}");
}

#[test]
fn coarser_steps_never_shrink_the_area() {
    let profile = synthesize_profile(0.316, 1, 168.0).unwrap();
    let total = stats(&profile).total_load;
    let mut prev = f64::INFINITY;
    for dt in [6.0, 3.0, 1.5, 0.75] {
        let area = discretize(&profile, dt).unwrap().area(168.0);
        assert!(area <= prev + 1e-9 && area >= total - 1e-6);
        prev = area;
    }
}

#[test]
fn synthetic_means_over_many_seeds() {
    for target in [0.143, 0.218, 0.221, 0.24, 0.316] {
        for seed in 100..120 {
            let p = synthesize_profile(target, seed, 168.0).unwrap();
            let m = stats(&p).mean_hourly;
            assert!((m - target).abs() <= 0.02 * target, "{target} seed {seed}: {m}");
            for k in 0..336 {
                let v = p.value(k as f64 * 0.5 + 0.25);
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
