#ifndef NOISELAB_H
#define NOISELAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define NL_API __declspec(dllexport)
#else
#define NL_API __attribute__((visibility("default")))
#endif

typedef enum nl_status {
    NL_OK = 0,
    NL_ERR_INVALID_ARGUMENT = 1,
    NL_ERR_CONFIG = 2,
    NL_ERR_IO = 3,
    NL_ERR_DIMENSION = 4,
    NL_ERR_INTERNAL = 5
} nl_status;

typedef struct nl_experiment nl_experiment;
typedef struct nl_summary nl_summary;
typedef struct nl_report nl_report;

/* Message for the most recent failure on the calling thread; "" if none. */
NL_API const char* nl_last_error(void);
NL_API const char* nl_version(void);

NL_API nl_status nl_experiment_load(const char* path, nl_experiment** out);
NL_API nl_status nl_experiment_parse_json(const char* json, nl_experiment** out);
NL_API void nl_experiment_free(nl_experiment* exp);
NL_API const char* nl_experiment_name(const nl_experiment* exp);
NL_API const char* nl_experiment_kind(const nl_experiment* exp);
NL_API const char* nl_experiment_hash(const nl_experiment* exp);
NL_API int nl_experiment_is_grid(const nl_experiment* exp);

/* out_root may be NULL: the config's output_dir is used, under $NOISELAB_OUTPUT_ROOT when relative. */
NL_API nl_status nl_run(const nl_experiment* exp, const char* out_root, nl_summary** out);
NL_API nl_status nl_sweep(const nl_experiment* exp, const char* out_root, unsigned jobs, nl_summary** out);
NL_API int nl_summary_bounds_ok(const nl_summary* s);
NL_API const char* nl_summary_json(const nl_summary* s);
NL_API const char* nl_summary_output_dir(const nl_summary* s);
NL_API void nl_summary_free(nl_summary* s);

/* out_dir may be NULL for a scratch directory that is removed afterwards. */
NL_API nl_status nl_accept(int quick, const char* out_dir, nl_report** out);
NL_API int nl_report_all_pass(const nl_report* r);
NL_API const char* nl_report_table(const nl_report* r);
NL_API const char* nl_report_json(const nl_report* r);
NL_API void nl_report_free(nl_report* r);

NL_API nl_status nl_mislabel_rate(size_t dim, const double* mu1, const double* mu2, const double* delta, double sigma,
                                  double* out);
/* loss is a JSON loss spec such as "\"gce\"" or {"kind":"gce","q":0.5}. */
NL_API nl_status nl_loss_value(const char* loss, size_t k, const double* p, int label, double* out);
NL_API nl_status nl_loss_grad(const char* loss, size_t k, const double* p, int label, double* grad_out);

/* Negative-control hook: adds shift to every normal CDF evaluation. */
NL_API void nl_testing_set_cdf_fault(double shift);

#ifdef __cplusplus
}
#endif

#endif
