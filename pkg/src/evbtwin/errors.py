"""Exception hierarchy shared by all evbtwin modules."""


class TwinError(Exception):
    """Base class for all errors raised by this package."""


# -- kinematics --------------------------------------------------------------

class UnreachableError(TwinError):
    """IK failed to converge; carries the best residual seen."""

    def __init__(self, message, best_pos_err=None, best_rot_err=None, residual_log=None):
        super().__init__(message)
        self.best_pos_err = best_pos_err
        self.best_rot_err = best_rot_err
        self.residual_log = residual_log if residual_log is not None else []


# -- scene -------------------------------------------------------------------

class SchemaError(TwinError):
    """Scene or robot document is missing a field or has the wrong shape."""


class CycleError(TwinError):
    """Component precedence graph contains a cycle."""


class DanglingRefError(TwinError):
    """Reference to an unknown tool, frame or component."""


class UnknownIdError(TwinError):
    """Lookup of a frame/component id that does not exist."""


class AlreadyDetachedError(TwinError):
    """Operation requires an Attached component."""


class IllegalTransitionError(TwinError):
    """Component state transition other than Attached -> Detached -> Removed."""


# -- motion / skills ----------------------------------------------------------

class StartInCollisionError(TwinError):
    pass


class GoalInCollisionError(TwinError):
    pass


class PlanningTimeoutError(TwinError):
    """RRT iteration budget exhausted without connecting the trees."""


class CollisionOnPathError(TwinError):
    pass


class PrecedenceViolationError(TwinError):
    """Detach requested while predecessors are still in place."""

    def __init__(self, component_id, blockers):
        super().__init__(
            f"{component_id} is blocked by: {', '.join(sorted(blockers))}")
        self.component_id = component_id
        self.blockers = sorted(blockers)


class UnknownStrategyError(TwinError):
    pass


# -- registration --------------------------------------------------------------

class DegenerateInputError(TwinError):
    """Point sets are collinear or coincident; no unique rigid transform."""


class CountMismatchError(TwinError):
    pass


class ResidualTooHighError(TwinError):
    """Pose update rejected by the residual gate."""


# -- link protocol -------------------------------------------------------------

class ClampViolationError(TwinError):
    """Correction exceeds the per-cycle clamp."""


class WireParseError(TwinError):
    """Malformed wire frame."""


class WireOrderError(TwinError):
    """Wire frame keys present but out of order."""


class WireRangeError(TwinError):
    """Wire frame value outside its permitted range."""


# -- session -------------------------------------------------------------------

class BusyError(TwinError):
    """A skill is already executing."""


class LinkFaultedError(TwinError):
    """The cyclic link entered the Faulted state during execution."""


class EmptySessionError(TwinError):
    """save_sequence called with no completed records."""


class SceneMismatchError(TwinError):
    """Sequence document hash does not match the loaded scene."""


class ReplayAbortedError(TwinError):
    def __init__(self, record_index, reason):
        super().__init__(f"replay aborted at record {record_index}: {reason}")
        self.record_index = record_index
        self.reason = reason


# -- analysis --------------------------------------------------------------------

class ZeroInvestmentError(TwinError):
    pass


class LabelMismatchError(TwinError):
    pass


class DistributionError(TwinError):
    """Likert distribution does not sum to 100% (within rounding)."""


class RangeError(TwinError):
    """Likert response outside 1..5."""
