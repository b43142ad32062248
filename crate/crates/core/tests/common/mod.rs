//! Shared helpers for integration tests: a direct simulator-output to
//! game-sample conversion that mirrors what the IO layer's ingest stage
//! produces from the emitted CSV.

use qmi_core::domain::{Action, FourthDownState, GameState, PlayState, ScoreState, Team};
use qmi_core::sim::{SimGame, SimPlayType};
use qmi_core::transition::{GameSample, ThirdDownObs};

pub fn bin_of(yardline_100: u8) -> u8 {
    (yardline_100 - 1) / 10 + 1
}

pub fn samples_from_sim(games: &[SimGame]) -> Vec<GameSample> {
    games.iter().map(sample_from_game).collect()
}

fn sample_from_game(game: &SimGame) -> GameSample {
    let mut sample = GameSample::default();
    let mut seq: Vec<(GameState, u8, Option<usize>)> = Vec::new();
    for (ri, row) in game.rows.iter().enumerate() {
        let team = if row.posteam_is_home { Team::A } else { Team::B };
        let ps = PlayState::new(team, row.down, bin_of(row.yardline_100), row.ytg.min(10))
            .expect("simulator emits valid states");
        seq.push((GameState::Play(ps), row.half, Some(ri)));
        if let Some((home_scored, kind)) = row.score_event {
            let steam = if home_scored { Team::A } else { Team::B };
            seq.push((GameState::Score(ScoreState { team: steam, kind }), row.half, None));
        }
    }
    for w in 0..seq.len() {
        let (state, half, row_idx) = seq[w];

        if let (GameState::Play(ps), Some(ri)) = (state, row_idx) {
            if ps.down == 4 {
                let row = &game.rows[ri];
                let action = action_of(row.play_type);
                let canonical = if ps.team == Team::A { ps } else { ps.mirror() };
                let sigma = FourthDownState::from_play(canonical).unwrap();
                sample.decisions.push((sigma, action));
            }
        }

        let Some(&(next, next_half, _)) = seq.get(w + 1) else { continue };
        if next_half != half {
            continue;
        }
        let acting = state.team();
        let (from, to) =
            if acting == Team::A { (state, next) } else { (state.mirror(), next.mirror()) };
        sample.policy_pairs.push((from.index(), to.index()));

        let (GameState::Play(ps), Some(ri)) = (state, row_idx) else { continue };
        let row = &game.rows[ri];
        let canonical = if acting == Team::A { ps } else { ps.mirror() };
        if ps.down == 4 {
            let sigma = FourthDownState::from_play(canonical).unwrap();
            sample.action_obs.push((sigma, action_of(row.play_type), to.index()));
        } else if ps.down == 3 && matches!(row.play_type, SimPlayType::Run | SimPlayType::Pass) {
            let sigma =
                FourthDownState::new(canonical.yardline_bin, canonical.ytg_bucket).unwrap();
            let converted = row.yards_gained >= row.ytg as i16;
            let scored = matches!(next, GameState::Score(_));
            let turned_over = match next {
                GameState::Play(p2) => p2.team != acting,
                GameState::Score(_) => false,
            };
            let post = (row.yardline_100 as i16 - row.yards_gained).clamp(1, 99) as u8;
            sample.third_down_obs.push(ThirdDownObs {
                as_fourth: sigma,
                kept_realized_outcome: converted || scored || turned_over,
                realized_next: to.index(),
                post_yardline_100: post,
            });
        }
    }
    sample
}

fn action_of(play_type: SimPlayType) -> Action {
    match play_type {
        SimPlayType::Punt => Action::Punt,
        SimPlayType::FieldGoal => Action::Fga,
        SimPlayType::Run | SimPlayType::Pass => Action::Go,
    }
}
