import numpy as np
import cv2
from sklearn.cluster import KMeans
from scipy import ndimage

arr = np.array(image_clue_0.convert('RGB'))
gray = cv2.cvtColor(arr, cv2.COLOR_RGB2GRAY)
_, mask = cv2.threshold(gray, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
km = KMeans(n_clusters=3, n_init=10, random_state=0).fit(arr.reshape(-1, 3).astype(float))
colour_labels = km.labels_.reshape(gray.shape)
objects, count = ndimage.label(mask > 0)
sizes = ndimage.sum(mask > 0, objects, range(1, count + 1))
kept = [s for s in sizes if s > 50]
print(count, len(kept))
