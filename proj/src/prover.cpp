namespace chroma {}
