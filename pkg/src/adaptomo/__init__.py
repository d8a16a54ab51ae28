"""Implementation-adapted filters for parallel-beam filtered backprojection.

Five deliberately different reconstruction implementations share one
filtered-backprojection pipeline.  For each of them a detector-space filter
is fitted by linear least squares so that the forward projection of its
reconstruction matches the measured sinogram; the fitted filters make the
implementations agree much more closely than any standard filter does.
"""

from .errors import (AdaptomoError, ConfigError, DegenerateInputError, FormatError,
                     InvalidArgumentError, NumericalError, OutOfRangeError, PackingError)
from .filterbank import (BasisSet, FilterSpec, apply_filter, compute_adapted_filter,
                         compute_reference_filter, expbin_basis, filter_matrix,
                         projection_residual, read_filter, standard_filter, write_filter)
from .metrics import (ReconSet, f1_jaccard, mean_std, otsu_threshold, pixelwise_std, rmse,
                      segment, squared_bias, std_histogram)
from .phantoms import (FoamSpec, add_poisson_noise, add_zingers, analytic_sinogram,
                       generate_foam, rasterize_slice, single_pixel_phantom, slice_phantom)
from .raster import Geometry, ImageGrid, Sinogram, make_geometry, read_raster, write_raster
from .reconstructors import (IMPLEMENTATIONS, Reconstructor, backproject, fbp,
                             forward_project, reconstruct, sirt)

__version__ = "0.1.0"
