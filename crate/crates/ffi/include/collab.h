#ifndef COLLAB_H
#define COLLAB_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible `collab_*` call. `COLLAB_STATUS_OK` is zero.
typedef enum CollabStatus {
  COLLAB_STATUS_OK = 0,
  COLLAB_STATUS_NULL_POINTER = 1,
  COLLAB_STATUS_INVALID_ARGUMENT = 2,
  COLLAB_STATUS_IO = 3,
  COLLAB_STATUS_MALFORMED_INPUT = 4,
  COLLAB_STATUS_INVALID_BOX = 5,
  COLLAB_STATUS_INVALID_SCORE = 6,
  COLLAB_STATUS_TIMESTAMP = 7,
  COLLAB_STATUS_NO_PAIRS_DETECTED = 8,
  COLLAB_STATUS_TOO_FEW_FRAMES = 9,
  COLLAB_STATUS_TOO_FEW_VALUES = 10,
  COLLAB_STATUS_DEGENERATE_VARIANCE = 11,
  COLLAB_STATUS_MISSING_CONDITION = 12,
  COLLAB_STATUS_PANIC = 99,
} CollabStatus;

typedef enum CollabCondition {
  COLLAB_CONDITION_TREATMENT = 0,
  COLLAB_CONDITION_CONTROL = 1,
} CollabCondition;

typedef enum CollabIndicator {
  COLLAB_INDICATOR_COLLABORATION = 0,
  COLLAB_INDICATOR_TIME = 1,
} CollabIndicator;

// Opaque session handle.
typedef struct CollabSession CollabSession;

// Axis-aligned box in pixels; requires `x_min < x_max` and `y_min < y_max`.
typedef struct CollabBox {
  double x_min;
  double y_min;
  double x_max;
  double y_max;
} CollabBox;

typedef struct CollabSessionMetrics {
  enum CollabCondition condition;
  // Percent in [0, 100].
  double level_of_collaboration;
  // Seconds.
  double time_on_task;
  size_t frames_total;
  size_t frames_with_pair;
  double coverage;
} CollabSessionMetrics;

typedef struct CollabAnova {
  double f;
  size_t df_between;
  size_t df_within;
} CollabAnova;

typedef struct CollabGroupSummary {
  enum CollabCondition condition;
  size_t n;
  double mean;
  double sd;
} CollabGroupSummary;

// Treatment versus control on one indicator.
typedef struct CollabComparison {
  double f;
  size_t df_between;
  size_t df_within;
  double p;
  // Treatment mean minus control mean, over the pooled SD.
  double cohens_d;
  struct CollabGroupSummary treatment;
  struct CollabGroupSummary control;
} CollabComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *collab_version(void);

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len - 1` bytes) and returns the full message length in bytes.
// Pass a null `buf` to query the length.
size_t collab_last_error_message(char *buf, size_t len);

// Intersection area of two boxes.
enum CollabStatus collab_overlap_area(const struct CollabBox *a,
                                      const struct CollabBox *b,
                                      double *out);

// Intersection area divided by the smaller box's area.
enum CollabStatus collab_overlap_ratio(const struct CollabBox *a,
                                       const struct CollabBox *b,
                                       double *out);

// Decodes a filename timestamp (seconds after midnight). A null `pattern`
// selects `HH-MM-SS`.
enum CollabStatus collab_parse_filename_timestamp(const char *name,
                                                  const char *pattern,
                                                  double *out_seconds);

// Loads a session from a detection CSV file. On success `*out` receives a
// handle that must be released with `collab_session_free`.
enum CollabStatus collab_session_from_csv_path(const char *path,
                                               const char *team_id,
                                               enum CollabCondition condition,
                                               const char *timestamp_pattern,
                                               struct CollabSession **out);

// Loads a session from detection CSV text.
enum CollabStatus collab_session_from_csv_str(const char *csv,
                                              const char *team_id,
                                              enum CollabCondition condition,
                                              const char *timestamp_pattern,
                                              struct CollabSession **out);

// Releases a session handle. Null is ignored.
void collab_session_free(struct CollabSession *session);

// Number of frames in the session, or 0 for a null handle.
size_t collab_session_frame_count(const struct CollabSession *session);

// Level of collaboration, time on task and coverage for one session.
enum CollabStatus collab_session_metrics(const struct CollabSession *session,
                                         double min_score,
                                         struct CollabSessionMetrics *out);

// Upper-tail probability `P(F > f)` for the F distribution.
enum CollabStatus collab_f_p_value(double f, double df1, double df2, double *out);

// One-way ANOVA over two groups of values.
enum CollabStatus collab_anova_two_groups(const double *a,
                                          size_t a_len,
                                          const double *b,
                                          size_t b_len,
                                          struct CollabAnova *out);

// Cohen's d of `a` relative to `b` with the pooled sample SD.
enum CollabStatus collab_cohens_d(const double *a,
                                  size_t a_len,
                                  const double *b,
                                  size_t b_len,
                                  double *out);

// Compares treatment and control sessions on one indicator.
enum CollabStatus collab_compare_conditions(const struct CollabSessionMetrics *rows,
                                            size_t len,
                                            enum CollabIndicator indicator,
                                            struct CollabComparison *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLLAB_H */
