export {
  BridgeBatch,
  LatentFormatError,
  BadMagicError,
  TruncatedFileError,
  CountMismatchError,
  bridgeLoad,
  loadDlt,
  loadNpy,
} from './latentFile';
export { SampleConfig, SampleError, bridgeSample } from './sample';
export { ProviderError, imageDistance, lpipsProviderAdapter } from './provider';
