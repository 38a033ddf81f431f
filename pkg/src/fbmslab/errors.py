"""Exception hierarchy shared by all modules."""


class FBMSError(Exception):
    """Base class for every error raised by fbmslab."""


class MeshValidityError(FBMSError, ValueError):
    """Structural or geometric defect in a triangle mesh."""


class DisconnectedMeshError(MeshValidityError):
    pass


class DegenerateNormalError(FBMSError, ArithmeticError):
    def __init__(self, vertex, msg=None):
        self.vertex = int(vertex)
        super().__init__(msg or f"zero-length normal average at vertex {self.vertex}")


class DegenerateProjectionError(FBMSError, ValueError):
    pass


class NumericalError(FBMSError, ArithmeticError):
    pass


class MeshDegenerationError(FBMSError, RuntimeError):
    """Triangle quality fell below the configured floor during a solve."""


class PreconditionError(FBMSError, ValueError):
    pass
