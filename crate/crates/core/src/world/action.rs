#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Forward,
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Turn {
    Left,
    Right,
    None,
}

impl Move {
    pub const ALL: [Move; 2] = [Move::Forward, Move::Stay];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Turn {
    pub const ALL: [Turn; 3] = [Turn::Left, Turn::Right, Turn::None];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One full action: a movement choice and a rotation choice, taken together each frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionPair {
    pub movement: Move,
    pub turn: Turn,
}

impl ActionPair {
    pub const COUNT: usize = 6;
    pub const IDLE: ActionPair = ActionPair { movement: Move::Stay, turn: Turn::None };

    pub fn new(movement: Move, turn: Turn) -> Self {
        Self { movement, turn }
    }

    pub fn from_indices(movement: usize, turn: usize) -> Self {
        Self { movement: Move::ALL[movement], turn: Turn::ALL[turn] }
    }

    /// Joint index in `0..6`: `movement * 3 + turn`.
    pub fn index(self) -> usize {
        self.movement.index() * 3 + self.turn.index()
    }

    pub fn from_index(i: usize) -> Self {
        Self::from_indices(i / 3, i % 3)
    }

    pub fn all() -> impl Iterator<Item = ActionPair> {
        (0..Self::COUNT).map(Self::from_index)
    }
}
