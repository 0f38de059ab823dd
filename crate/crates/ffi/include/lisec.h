#ifndef LISEC_H
#define LISEC_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define LISEC_ADDRESS_LEN 16

#define LISEC_SECRET_LEN 16

/**
 * Challenge-response database held by the border router.
 */
typedef struct LisecCrDatabase LisecCrDatabase;

/**
 * Experiment configuration.
 */
typedef struct LisecScenario LisecScenario;

typedef int32_t LisecStatus;

/**
 * Fixed part of a decoded DAO.
 */
typedef struct LisecDao {
  uint8_t src[LISEC_ADDRESS_LEN];
  uint8_t target[LISEC_ADDRESS_LEN];
  uint8_t sequence;
  uint8_t reserved;
  size_t options_len;
} LisecDao;

/**
 * Per-run results. `ae2ed_s` is NaN when nothing was delivered.
 */
typedef struct LisecRunMetrics {
  double pdr;
  double ae2ed_s;
  double apc_mw;
  uint64_t n_blacklist;
  uint64_t rt_peak;
  uint64_t sent;
  uint64_t received;
  uint64_t forged_emitted;
} LisecRunMetrics;

#define LISEC_OK 0

#define LISEC_ERR_NULL 1

#define LISEC_ERR_INVALID 2

#define LISEC_ERR_DECODE 3

#define LISEC_ERR_DUPLICATE 4

#define LISEC_ERR_CAPACITY 5

#define LISEC_ERR_BUFFER_TOO_SMALL 6

#define LISEC_ERR_SIMULATION 7

#define LISEC_ERR_IO 8

#define LISEC_ERR_PANIC 99

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to fit) and returns the full message length.
 */
size_t lisec_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lisec_version(void);

/**
 * `license = challenge XOR response` at the given width in bits.
 */
LisecStatus lisec_generate_license(uint64_t challenge,
                                   uint64_t response,
                                   uint32_t width_bits,
                                   uint64_t *license_out);

/**
 * `response = challenge XOR license` at the given width in bits.
 */
LisecStatus lisec_recover_response(uint64_t challenge,
                                   uint64_t license,
                                   uint32_t width_bits,
                                   uint64_t *response_out);

LisecStatus lisec_db_new(size_t capacity, uint32_t width_bits, struct LisecCrDatabase **db_out);

void lisec_db_free(struct LisecCrDatabase *db);

size_t lisec_db_len(const struct LisecCrDatabase *db);

/**
 * Registers `node_id` with a keyed PUF built from the 16-byte `secret`;
 * the challenge is drawn from a generator seeded with `seed`.
 */
LisecStatus lisec_db_register_keyed(struct LisecCrDatabase *db,
                                    uint16_t node_id,
                                    const uint8_t *secret,
                                    uint64_t seed,
                                    uint64_t *challenge_out,
                                    uint64_t *license_out);

/**
 * Stores an externally provisioned pair.
 */
LisecStatus lisec_db_insert(struct LisecCrDatabase *db,
                            uint16_t node_id,
                            uint64_t challenge,
                            uint64_t response);

/**
 * Sets `*accepted` to whether `license` authenticates `node_id`.
 */
LisecStatus lisec_db_verify(const struct LisecCrDatabase *db,
                            uint16_t node_id,
                            uint64_t license,
                            bool *accepted);

/**
 * Encodes a DAO into `buf`. `*written` receives the frame length; when the
 * buffer is too small nothing is written and the call fails with
 * `LISEC_ERR_BUFFER_TOO_SMALL`.
 */
LisecStatus lisec_dao_encode(const uint8_t *src,
                             const uint8_t *target,
                             uint8_t sequence,
                             uint8_t reserved,
                             const uint8_t *options,
                             size_t options_len,
                             uint8_t *buf,
                             size_t buf_len,
                             size_t *written);

/**
 * Decodes a DAO frame. Options are copied into `options` when it is large
 * enough; `dao->options_len` always reports their length.
 */
LisecStatus lisec_dao_decode(const uint8_t *frame,
                             size_t frame_len,
                             struct LisecDao *dao_out,
                             uint8_t *options,
                             size_t options_cap);

/**
 * New scenario with every key at its default.
 */
LisecStatus lisec_scenario_new(struct LisecScenario **scenario_out);

/**
 * Parses a key=value scenario file.
 */
LisecStatus lisec_scenario_load(const char *path, struct LisecScenario **scenario_out);

void lisec_scenario_free(struct LisecScenario *s);

/**
 * Sets one scenario key, e.g. `("rt_cap", "8")`.
 */
LisecStatus lisec_scenario_set(struct LisecScenario *s, const char *key, const char *value);

/**
 * Runs one arm (`baseline`, `attack`, `defense`, `defense_encrypted`) for
 * one seed.
 */
LisecStatus lisec_run(const struct LisecScenario *s,
                      const char *arm,
                      uint64_t seed,
                      struct LisecRunMetrics *metrics_out);

/**
 * Runs every arm and seed of the scenario and writes `runs.csv`,
 * `summary.csv` and any traces into `out_dir`.
 */
LisecStatus lisec_run_experiment(const struct LisecScenario *s,
                                 uint64_t seed_base,
                                 const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LISEC_H */
