"""
Error types for SATR.

Every error carries an `exit_code` so src/cli.py can map it onto the
exit-code contract:
- 30 malformed input (instance, certificate, CNF precondition)
- 20 limits (oracle bounds, enumeration caps, lambda > 3)
- 40 internal (anything that escapes the pipeline)
A NO answer is never an exception; it is a Verdict.
"""


class SATRError(Exception):
    exit_code = 40


class MalformedInstance(SATRError):
    exit_code = 30


class MalformedCertificate(SATRError):
    exit_code = 30


class PreconditionFailed(SATRError):
    exit_code = 30


class ComponentTooLarge(SATRError):
    exit_code = 20


class LimitExceeded(SATRError):
    exit_code = 20


class CapExceeded(SATRError):
    exit_code = 20


class NotPlanar(SATRError):
    pass


class NotBiconnected(SATRError):
    pass


class NotAdjacent(SATRError):
    pass


class VertexNotInSkeleton(SATRError):
    pass


class Infeasible(SATRError):
    """No represented order satisfies a requested consecutivity."""


class SignatureMismatch(SATRError):
    pass


class CaseNotApplicable(SATRError):
    pass


class StructureViolation(SATRError):
    """A structural assumption of the elimination loop did not hold."""


class InternalInconsistency(SATRError):
    """Embedding reconstruction failed; always a pipeline bug."""
