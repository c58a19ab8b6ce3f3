#ifndef FEKERN_H
#define FEKERN_H

#include <stddef.h>
#include <stdint.h>

typedef enum FekernStatus {
  FEKERN_STATUS_OK = 0,
  FEKERN_STATUS_NULL_POINTER = 1,
  FEKERN_STATUS_INVALID_ARGUMENT = 2,
  FEKERN_STATUS_BUFFER_SIZE = 3,
  FEKERN_STATUS_SINGULAR = 4,
  FEKERN_STATUS_NO_CONVERGENCE = 5,
  FEKERN_STATUS_UNSUPPORTED = 6,
  FEKERN_STATUS_PARSE = 7,
  FEKERN_STATUS_IO = 8,
  FEKERN_STATUS_PANIC = 9,
} FekernStatus;

// Local finite element handle.
typedef struct FekernElement FekernElement;

// Element geometry handle.
typedef struct FekernGeometry FekernGeometry;

// Scalar sparse matrix handle.
typedef struct FekernMatrix FekernMatrix;

// Reference-domain function: writes `range_dim` values at `x` into `out`.
typedef void (*FekernFunction)(const double *x,
                               size_t dim,
                               double *out,
                               size_t range_dim,
                               void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; valid until the next
// failing call on the same thread.
const char *fekern_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *fekern_version(void);

// Affine geometry `x0 + A xi`; `matrix` is the row-major
// `world_dim x dim(kind)` matrix `A`.
enum FekernStatus fekern_geometry_affine(const char *kind,
                                         size_t world_dim,
                                         const double *origin,
                                         const double *matrix,
                                         size_t matrix_len,
                                         struct FekernGeometry **out);

// Corner-interpolating geometry; `corners` holds `corner_count` points of
// dimension `world_dim`, one after the other.
enum FekernStatus fekern_geometry_multilinear(const char *kind,
                                              size_t world_dim,
                                              const double *corners,
                                              size_t corner_count,
                                              struct FekernGeometry **out);

// The unit square lifted onto `(x, y, sin(x y))`.
enum FekernStatus fekern_geometry_sine_surface(struct FekernGeometry **out);

void fekern_geometry_free(struct FekernGeometry *g);

enum FekernStatus fekern_geometry_dims(const struct FekernGeometry *g,
                                       size_t *local_dim,
                                       size_t *world_dim);

enum FekernStatus fekern_geometry_global(const struct FekernGeometry *g,
                                         const double *local,
                                         size_t local_len,
                                         double *out,
                                         size_t out_len);

// Row-major `world_dim x local_dim` Jacobian.
enum FekernStatus fekern_geometry_jacobian(const struct FekernGeometry *g,
                                           const double *local,
                                           size_t local_len,
                                           double *out,
                                           size_t out_len);

// Row-major `local_dim x world_dim` (pseudo-)inverse of the Jacobian.
enum FekernStatus fekern_geometry_jacobian_inverse(const struct FekernGeometry *g,
                                                   const double *local,
                                                   size_t local_len,
                                                   double *out,
                                                   size_t out_len);

enum FekernStatus fekern_geometry_integration_element(const struct FekernGeometry *g,
                                                      const double *local,
                                                      size_t local_len,
                                                      double *out);

// Local coordinate of a world point by Newton iteration.
enum FekernStatus fekern_geometry_local(const struct FekernGeometry *g,
                                        const double *global,
                                        size_t global_len,
                                        double *out,
                                        size_t out_len);

// Element by family name (`lagrange_simplex`, `lagrange_cube`, `p1_bubble`,
// `p2_bubble`, `refined_lagrange`, `crouzeix_raviart`, `rt0_prism`,
// `rt0_pyramid`). `bits` are the facet orientation flags of the RT0 families.
enum FekernStatus fekern_element_new(const char *name,
                                     size_t dim,
                                     size_t order,
                                     uint32_t bits,
                                     struct FekernElement **out);

void fekern_element_free(struct FekernElement *e);

// Number of shape functions, range dimension and reference dimension.
enum FekernStatus fekern_element_info(const struct FekernElement *e,
                                      size_t *size,
                                      size_t *range_dim,
                                      size_t *dim);

// Shape function values, `size x range_dim` row-major.
enum FekernStatus fekern_element_evaluate(const struct FekernElement *e,
                                          const double *local,
                                          size_t local_len,
                                          double *out,
                                          size_t out_len);

// Shape function Jacobians, `size x range_dim x dim` row-major.
enum FekernStatus fekern_element_jacobian(const struct FekernElement *e,
                                          const double *local,
                                          size_t local_len,
                                          double *out,
                                          size_t out_len);

// Interpolation coefficients (length `size`) of a callback function.
enum FekernStatus fekern_element_interpolate(const struct FekernElement *e,
                                             FekernFunction f,
                                             void *user,
                                             double *out,
                                             size_t out_len);

// Facet flux matrix `facets x size` of a vector-valued element.
enum FekernStatus fekern_element_flux_matrix(const struct FekernElement *e,
                                             double *out,
                                             size_t out_len);

// Reads a MatrixMarket coordinate file.
enum FekernStatus fekern_matrix_read(const char *path, struct FekernMatrix **out);

void fekern_matrix_free(struct FekernMatrix *m);

enum FekernStatus fekern_matrix_info(const struct FekernMatrix *m,
                                     size_t *rows,
                                     size_t *cols,
                                     size_t *nnz);

// SVG spy plot of a matrix as a string owned by the caller, released with
// [`fekern_string_free`].
enum FekernStatus fekern_matrix_svg(const struct FekernMatrix *m,
                                    size_t cell,
                                    size_t pad,
                                    char **out);

void fekern_string_free(char *s);

// Reads a MatrixMarket file and writes its spy plot, exactly as the `spy`
// subcommand does. Any of the size outputs may be null.
enum FekernStatus fekern_spy(const char *input,
                             const char *output,
                             size_t cell,
                             size_t pad,
                             size_t *rows,
                             size_t *cols,
                             size_t *nnz);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEKERN_H */
