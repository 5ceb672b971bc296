//! Short-time spectra, Wiener masking, SNR bookkeeping and WAV I/O.

mod snr;
mod stft;
mod wav;

pub use snr::{add_white_noise, input_snr, mix_at_snr, output_snr, white_noise};
pub use stft::{hann, istft, stft, wiener_reconstruct, Spectrogram, WINDOW_SUM_FLOOR};
pub use wav::{read_wav, write_wav, SUPPORTED_RATES};
