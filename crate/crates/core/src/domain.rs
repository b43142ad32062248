//! State space, actions, and rewards for the fourth-down decision process.
//!
//! The game is modeled over 806 states: 800 play states (team, down,
//! yardline bin, yards-to-go bucket) plus 6 scoring states (team, score
//! kind).  Both teams are treated as identical league-average sides, so
//! every quantity is expressed from team A's perspective and mirrored for
//! team B.

use core::fmt;

/// The two generic sides.  Team A is the canonical orientation team.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Team {
    A,
    B,
}

impl Team {
    pub fn other(self) -> Team {
        match self {
            Team::A => Team::B,
            Team::B => Team::A,
        }
    }
}

/// Score type attached to a scoring state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScoreKind {
    Td,
    Fg,
    Saf,
}

/// Fourth-down action set, ordered by increasing risk: PUNT < FGA < GO.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Punt,
    Fga,
    Go,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Punt, Action::Fga, Action::Go];

    pub fn index(self) -> usize {
        match self {
            Action::Punt => 0,
            Action::Fga => 1,
            Action::Go => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Action::Punt => "PUNT",
            Action::Fga => "FGA",
            Action::Go => "GO",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A scrimmage-play state.
///
/// `yardline_bin` i covers 10(i-1)+1 ..= 10i yards to the opponent end
/// zone (bin 10 covers 91-99).  `ytg_bucket` holds yards to a first down:
/// 1..=9 literal, 10 meaning "10 or more".
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayState {
    pub team: Team,
    pub down: u8,
    pub yardline_bin: u8,
    pub ytg_bucket: u8,
}

impl PlayState {
    pub fn new(team: Team, down: u8, yardline_bin: u8, ytg_bucket: u8) -> Option<PlayState> {
        if (1..=4).contains(&down) && (1..=10).contains(&yardline_bin) && (1..=10).contains(&ytg_bucket)
        {
            Some(PlayState { team, down, yardline_bin, ytg_bucket })
        } else {
            None
        }
    }

    pub fn mirror(self) -> PlayState {
        PlayState { team: self.team.other(), ..self }
    }
}

/// A scoring state: the team credited with a TD or FG, or debited a safety.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScoreState {
    pub team: Team,
    pub kind: ScoreKind,
}

impl ScoreState {
    pub fn mirror(self) -> ScoreState {
        ScoreState { team: self.team.other(), kind: self.kind }
    }
}

/// One of the 806 game states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GameState {
    Play(PlayState),
    Score(ScoreState),
}

pub const NUM_STATES: usize = 806;
pub const NUM_PLAY_STATES: usize = 800;
pub const NUM_SCORE_STATES: usize = 6;
pub const NUM_FOURTH_DOWN_STATES: usize = 100;
/// States where team A has possession (or is the scoring side): the three
/// A scoring states plus the 400 A play states.
pub const NUM_TEAM_STATES: usize = 403;

/// Dense index into the 806-state space.
///
/// Ordering: scoring states first (A-TD, A-FG, A-SAF, B-TD, B-FG, B-SAF),
/// then play states lexicographic by (team, down, yardline bin, ytg
/// bucket).  The ordering is part of the serialized file formats, so it
/// must not change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateIndex(pub u16);

impl StateIndex {
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }
}

fn score_kind_index(kind: ScoreKind) -> u16 {
    match kind {
        ScoreKind::Td => 0,
        ScoreKind::Fg => 1,
        ScoreKind::Saf => 2,
    }
}

fn team_index(team: Team) -> u16 {
    match team {
        Team::A => 0,
        Team::B => 1,
    }
}

impl GameState {
    pub fn index(self) -> StateIndex {
        match self {
            GameState::Score(s) => StateIndex(team_index(s.team) * 3 + score_kind_index(s.kind)),
            GameState::Play(p) => StateIndex(
                NUM_SCORE_STATES as u16
                    + team_index(p.team) * 400
                    + (p.down as u16 - 1) * 100
                    + (p.yardline_bin as u16 - 1) * 10
                    + (p.ytg_bucket as u16 - 1),
            ),
        }
    }

    pub fn from_index(idx: StateIndex) -> Option<GameState> {
        let i = idx.0;
        if i < NUM_SCORE_STATES as u16 {
            let team = if i < 3 { Team::A } else { Team::B };
            let kind = match i % 3 {
                0 => ScoreKind::Td,
                1 => ScoreKind::Fg,
                _ => ScoreKind::Saf,
            };
            Some(GameState::Score(ScoreState { team, kind }))
        } else if (i as usize) < NUM_STATES {
            let p = i - NUM_SCORE_STATES as u16;
            let team = if p < 400 { Team::A } else { Team::B };
            let p = p % 400;
            Some(GameState::Play(PlayState {
                team,
                down: (p / 100) as u8 + 1,
                yardline_bin: (p % 100 / 10) as u8 + 1,
                ytg_bucket: (p % 10) as u8 + 1,
            }))
        } else {
            None
        }
    }

    pub fn team(self) -> Team {
        match self {
            GameState::Play(p) => p.team,
            GameState::Score(s) => s.team,
        }
    }

    /// Swaps team labels, leaving the possession-relative fields alone.
    pub fn mirror(self) -> GameState {
        match self {
            GameState::Play(p) => GameState::Play(p.mirror()),
            GameState::Score(s) => GameState::Score(s.mirror()),
        }
    }
}

/// `mirror` expressed directly on dense indices.
pub fn mirror_index(idx: StateIndex) -> StateIndex {
    let i = idx.0;
    if i < 3 {
        StateIndex(i + 3)
    } else if i < 6 {
        StateIndex(i - 3)
    } else if i < 406 {
        StateIndex(i + 400)
    } else {
        StateIndex(i - 400)
    }
}

/// Position of a team-A state inside the 403-row team block, or `None`
/// for team-B states.  Scoring states sit in the block of the team named
/// in the tuple.
pub fn team_block_index(idx: StateIndex) -> Option<usize> {
    let i = idx.0 as usize;
    if i < 3 {
        Some(i)
    } else if (NUM_SCORE_STATES..NUM_SCORE_STATES + 400).contains(&i) {
        Some(3 + i - NUM_SCORE_STATES)
    } else {
        None
    }
}

/// Inverse of [`team_block_index`].
pub fn team_block_state(block: usize) -> StateIndex {
    debug_assert!(block < NUM_TEAM_STATES);
    if block < 3 {
        StateIndex(block as u16)
    } else {
        StateIndex((block - 3 + NUM_SCORE_STATES) as u16)
    }
}

/// Enumerates all 806 states in dense-index order.
pub fn all_states() -> impl Iterator<Item = GameState> {
    (0..NUM_STATES as u16).map(|i| GameState::from_index(StateIndex(i)).unwrap())
}

/// A fourth-down play state canonicalized to team A possession.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FourthDownState {
    yardline_bin: u8,
    ytg_bucket: u8,
}

impl FourthDownState {
    pub fn new(yardline_bin: u8, ytg_bucket: u8) -> Option<FourthDownState> {
        if (1..=10).contains(&yardline_bin) && (1..=10).contains(&ytg_bucket) {
            Some(FourthDownState { yardline_bin, ytg_bucket })
        } else {
            None
        }
    }

    pub fn yardline_bin(self) -> u8 {
        self.yardline_bin
    }

    pub fn ytg_bucket(self) -> u8 {
        self.ytg_bucket
    }

    /// Dense index in 0..100, row-major by (yardline bin, ytg bucket).
    pub fn dense(self) -> usize {
        (self.yardline_bin as usize - 1) * 10 + self.ytg_bucket as usize - 1
    }

    pub fn from_dense(i: usize) -> Option<FourthDownState> {
        if i < NUM_FOURTH_DOWN_STATES {
            Some(FourthDownState { yardline_bin: (i / 10) as u8 + 1, ytg_bucket: (i % 10) as u8 + 1 })
        } else {
            None
        }
    }

    pub fn play_state(self) -> PlayState {
        PlayState { team: Team::A, down: 4, yardline_bin: self.yardline_bin, ytg_bucket: self.ytg_bucket }
    }

    pub fn state_index(self) -> StateIndex {
        GameState::Play(self.play_state()).index()
    }

    /// Extracts the canonical fourth-down state from a play state,
    /// regardless of which team holds the ball.
    pub fn from_play(p: PlayState) -> Option<FourthDownState> {
        if p.down == 4 {
            FourthDownState::new(p.yardline_bin, p.ytg_bucket)
        } else {
            None
        }
    }

    pub fn region(self) -> FieldRegion {
        if self.yardline_bin <= 5 {
            FieldRegion::OpponentHalf
        } else {
            FieldRegion::OwnHalf
        }
    }
}

pub fn all_fourth_down_states() -> impl Iterator<Item = FourthDownState> {
    (0..NUM_FOURTH_DOWN_STATES).map(|i| FourthDownState::from_dense(i).unwrap())
}

/// The fixed size-two partition of the fourth-down space at the 50
/// yardline: P1 = opponent half (bins 1-5), P2 = own half (bins 6-10).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FieldRegion {
    OpponentHalf,
    OwnHalf,
}

impl FieldRegion {
    pub const ALL: [FieldRegion; 2] = [FieldRegion::OpponentHalf, FieldRegion::OwnHalf];

    pub fn index(self) -> usize {
        match self {
            FieldRegion::OpponentHalf => 0,
            FieldRegion::OwnHalf => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FieldRegion::OpponentHalf => "opponent_half",
            FieldRegion::OwnHalf => "own_half",
        }
    }
}

pub fn field_region(sigma: FourthDownState) -> FieldRegion {
    sigma.region()
}

/// Point values attached to the scoring states, from the scoring team's
/// perspective.  The touchdown value folds in the league-average
/// conversion attempt; the simulator overrides it with exact integers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardSpec {
    pub td_points: f64,
    pub fg_points: f64,
    pub saf_points: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec { td_points: 6.95, fg_points: 3.0, saf_points: -2.0 }
    }
}

/// Reward of a state from team A's perspective.  Play states carry zero;
/// team B scoring states are the negated team A values.  A safety state
/// debits the team named in the tuple (the side that conceded).
pub fn reward(state: GameState, spec: &RewardSpec) -> f64 {
    match state {
        GameState::Play(_) => 0.0,
        GameState::Score(s) => {
            let v = match s.kind {
                ScoreKind::Td => spec.td_points,
                ScoreKind::Fg => spec.fg_points,
                ScoreKind::Saf => spec.saf_points,
            };
            match s.team {
                Team::A => v,
                Team::B => -v,
            }
        }
    }
}

/// Reward looked up by dense index.
pub fn reward_by_index(idx: StateIndex, spec: &RewardSpec) -> f64 {
    match GameState::from_index(idx) {
        Some(s) => reward(s, spec),
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_space_sizes() {
        let mut plays = 0;
        let mut scores = 0;
        let mut fourth = 0;
        for s in all_states() {
            match s {
                GameState::Play(p) => {
                    plays += 1;
                    if p.down == 4 && p.team == Team::A {
                        fourth += 1;
                    }
                }
                GameState::Score(_) => scores += 1,
            }
        }
        assert_eq!(plays, NUM_PLAY_STATES);
        assert_eq!(scores, NUM_SCORE_STATES);
        assert_eq!(plays + scores, NUM_STATES);
        assert_eq!(fourth, NUM_FOURTH_DOWN_STATES);
    }

    #[test]
    fn index_is_a_bijection() {
        let mut seen = [false; NUM_STATES];
        for s in all_states() {
            let idx = s.index();
            assert!(!seen[idx.as_usize()], "duplicate index {idx:?}");
            seen[idx.as_usize()] = true;
            assert_eq!(GameState::from_index(idx), Some(s));
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn index_order_matches_documented_layout() {
        let atd = GameState::Score(ScoreState { team: Team::A, kind: ScoreKind::Td });
        assert_eq!(atd.index().0, 0);
        let bsaf = GameState::Score(ScoreState { team: Team::B, kind: ScoreKind::Saf });
        assert_eq!(bsaf.index().0, 5);
        let first_play = GameState::Play(PlayState::new(Team::A, 1, 1, 1).unwrap());
        assert_eq!(first_play.index().0, 6);
        let last_play = GameState::Play(PlayState::new(Team::B, 4, 10, 10).unwrap());
        assert_eq!(last_play.index().0, 805);
    }

    #[test]
    fn mirror_negates_reward() {
        let spec = RewardSpec::default();
        for s in all_states() {
            assert_eq!(reward(s, &spec), -reward(s.mirror(), &spec));
            assert_eq!(s.mirror().index(), mirror_index(s.index()));
            assert_eq!(s.mirror().mirror(), s);
        }
    }

    #[test]
    fn reward_examples() {
        let spec = RewardSpec::default();
        let atd = GameState::Score(ScoreState { team: Team::A, kind: ScoreKind::Td });
        assert_eq!(reward(atd, &spec), 6.95);
        let bfg = GameState::Score(ScoreState { team: Team::B, kind: ScoreKind::Fg });
        assert_eq!(reward(bfg, &spec), -3.0);
        let asaf = GameState::Score(ScoreState { team: Team::A, kind: ScoreKind::Saf });
        assert_eq!(reward(asaf, &spec), -2.0);
        let play = GameState::Play(PlayState::new(Team::B, 3, 7, 4).unwrap());
        assert_eq!(reward(play, &spec), 0.0);
    }

    #[test]
    fn field_regions_partition_the_fourth_down_space() {
        let mut opp = 0;
        let mut own = 0;
        for sigma in all_fourth_down_states() {
            match sigma.region() {
                FieldRegion::OpponentHalf => opp += 1,
                FieldRegion::OwnHalf => own += 1,
            }
        }
        assert_eq!(opp, 50);
        assert_eq!(own, 50);
        assert_eq!(FourthDownState::new(1, 3).unwrap().region(), FieldRegion::OpponentHalf);
        assert_eq!(FourthDownState::new(10, 3).unwrap().region(), FieldRegion::OwnHalf);
    }

    #[test]
    fn team_block_round_trip() {
        let mut count = 0;
        for s in all_states() {
            if let Some(b) = team_block_index(s.index()) {
                assert_eq!(team_block_state(b), s.index());
                assert_eq!(s.team(), Team::A);
                count += 1;
            } else {
                assert_eq!(s.team(), Team::B);
            }
        }
        assert_eq!(count, NUM_TEAM_STATES);
    }

    #[test]
    fn fourth_down_dense_round_trip() {
        for sigma in all_fourth_down_states() {
            assert_eq!(FourthDownState::from_dense(sigma.dense()), Some(sigma));
            let ps = sigma.play_state();
            assert_eq!(FourthDownState::from_play(ps), Some(sigma));
            assert_eq!(FourthDownState::from_play(ps.mirror()), Some(sigma));
        }
    }
}
