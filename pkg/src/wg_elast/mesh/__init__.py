from .core import (
    Cell,
    Marker,
    PolytopalMesh,
    ProperFace,
    build_mesh,
    build_submesh,
    cell_loops,
    cell_volume_direct,
    face_normals,
    skeleton_measure,
    with_markers,
)
from .generators import (
    GENERATORS,
    generate_cube_tet_mesh,
    generate_ladder_mesh,
    generate_triangle_mesh,
)
from .regularity import RegularityReport, check_regularity, proper_face_violations
from .textio import export_mesh, import_mesh, read_mesh, write_mesh

__all__ = [
    "Cell", "Marker", "PolytopalMesh", "ProperFace", "build_mesh", "build_submesh",
    "cell_loops", "cell_volume_direct", "face_normals", "skeleton_measure", "with_markers",
    "GENERATORS", "generate_cube_tet_mesh", "generate_ladder_mesh", "generate_triangle_mesh",
    "RegularityReport", "check_regularity", "proper_face_violations",
    "export_mesh", "import_mesh", "read_mesh", "write_mesh",
]
